//! Line configuration, presets, and validation.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::discovery::ProcessTree;
use crate::error::{Error, Result};
use crate::time::{parse_timestamp, Calendar, Timestamp};

/// Lognormal service time; `mu` and `sigma` parameterise ln(minutes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormal {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormal {
    pub fn from_median(minutes: f64, sigma: f64) -> Self {
        LogNormal {
            mu: minutes.ln(),
            sigma,
        }
    }

    pub fn median(&self) -> f64 {
        self.mu.exp()
    }

    /// Value for a standard-normal draw `z`.
    pub fn at(&self, z: f64) -> f64 {
        (self.mu + self.sigma * z).exp()
    }
}

/// When a sub-assembly chain starts working for a car.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// When the car is released to the line.
    Release,
    /// When the car starts at the named general-assembly station.
    Start(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaChain {
    pub name: String,
    pub stations: Vec<String>,
    pub trigger: Trigger,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Arrival {
    /// Lognormal inter-release times in minutes.
    Paced { mu: f64, sigma: f64 },
    /// Every car is released at the start; the line pulls as fast as it can.
    Saturated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub stations: Vec<String>,
    pub operators: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Operator {
    pub id: String,
    /// Divides drawn service times.
    pub speed: f64,
    /// Preference weight per station; unlisted stations weigh 1.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub preferences: BTreeMap<String, f64>,
}

/// Extra downstream work when an upstream station ran faster than its median:
/// `coefficient * max(0, median_up - actual_up)` minutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReworkSpec {
    pub upstream: String,
    pub downstream: String,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weighted {
    pub value: String,
    pub weight: f64,
}

/// Case attributes drawn per car and copied onto its events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarAttributes {
    pub colors: Vec<Weighted>,
    pub cities: Vec<Weighted>,
}

fn weighted(items: &[(&str, f64)]) -> Vec<Weighted> {
    items
        .iter()
        .map(|(v, w)| Weighted {
            value: v.to_string(),
            weight: *w,
        })
        .collect()
}

impl Default for CarAttributes {
    fn default() -> Self {
        CarAttributes {
            colors: weighted(&[("white", 0.4), ("black", 0.2), ("blue", 0.2), ("red", 0.2)]),
            cities: weighted(&[
                ("Amsterdam", 1.0),
                ("Rotterdam", 1.0),
                ("Utrecht", 1.0),
                ("Brussels", 1.0),
                ("Antwerp", 1.0),
                ("Aachen", 1.0),
                ("Cologne", 1.0),
            ]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectLayerConfig {
    /// Uniform number of products (cars) per planned order.
    pub products_per_order: CountRange,
    pub components_per_product: u32,
}

impl Default for ObjectLayerConfig {
    fn default() -> Self {
        ObjectLayerConfig {
            products_per_order: CountRange { min: 1, max: 4 },
            components_per_product: 3,
        }
    }
}

/// Skip a station with the given probability from car `onset` (0-based) on.
/// With several specs for a station, the one with the latest onset not after
/// the car applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSpec {
    pub station: String,
    pub skip_probability: f64,
    pub onset: usize,
}

/// Multiply a station's service times from car `onset` (0-based) on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub station: String,
    pub onset: usize,
    pub service_scale: f64,
}

/// Queue of `capacity` items in front of a sub-assembly station, decoupling
/// it from its chain predecessor. Capacity 0 is plain blocking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferSpec {
    pub sa_station: String,
    pub capacity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Injection {
    Deviation(DeviationSpec),
    Drift(DriftSpec),
    Buffer(BufferSpec),
}

impl Injection {
    pub fn station(&self) -> &str {
        match self {
            Injection::Deviation(d) => &d.station,
            Injection::Drift(d) => &d.station,
            Injection::Buffer(b) => &b.sa_station,
        }
    }
}

impl From<DeviationSpec> for Injection {
    fn from(s: DeviationSpec) -> Self {
        Injection::Deviation(s)
    }
}

impl From<DriftSpec> for Injection {
    fn from(s: DriftSpec) -> Self {
        Injection::Drift(s)
    }
}

impl From<BufferSpec> for Injection {
    fn from(s: BufferSpec) -> Self {
        Injection::Buffer(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineConfig {
    pub ga_stations: Vec<String>,
    pub sa_chains: Vec<SaChain>,
    /// General-assembly station to the sub-assembly stations whose output it
    /// waits for. The last station of every chain must be listed.
    pub prerequisites: BTreeMap<String, BTreeSet<String>>,
    pub service: BTreeMap<String, LogNormal>,
    #[serde(default)]
    pub calendar: Calendar,
    /// First instant considered; work starts at the next opening time.
    pub start: String,
    /// Minutes to move a car or item into a station.
    pub transfer_minutes: f64,
    pub arrival: Arrival,
    pub sections: Vec<Section>,
    pub operators: Vec<Operator>,
    #[serde(default)]
    pub rework: Vec<ReworkSpec>,
    #[serde(default)]
    pub car_attributes: CarAttributes,
    #[serde(default)]
    pub object_layer: ObjectLayerConfig,
    #[serde(default)]
    pub injections: Vec<Injection>,
}

fn labels(prefix: &str, range: std::ops::RangeInclusive<usize>) -> Vec<String> {
    range.map(|i| format!("{prefix}{i}")).collect()
}

fn chain(name: &str, stations: Vec<String>, trigger: Trigger) -> SaChain {
    SaChain {
        name: name.to_string(),
        stations,
        trigger,
    }
}

fn start_at(ga: &str) -> Trigger {
    Trigger::Start(ga.to_string())
}

fn pool(name: &str, stations: Vec<String>, prefix: &str, size: usize) -> (Section, Vec<Operator>) {
    let ops: Vec<Operator> = (1..=size)
        .map(|i| Operator {
            id: format!("{prefix}{i}"),
            speed: 1.0,
            preferences: BTreeMap::new(),
        })
        .collect();
    let section = Section {
        name: name.to_string(),
        stations,
        operators: ops.iter().map(|o| o.id.clone()).collect(),
    };
    (section, ops)
}

impl LineConfig {
    /// Default line: GA0..GA27 plus eight sub-assembly chains over SA1..SA33.
    ///
    /// Fixed by the domain: SA1 feeds GA14, SA3 -> SA4 feeds GA16, SA9 feeds
    /// GA17, and the door chain SA6 -> SA7 -> SA8 where GA24 also waits for
    /// SA7. Everything else (other chains, triggers, parameters) is invented.
    pub fn default_line() -> Self {
        let ga = labels("GA", 0..=27);
        let sa_chains = vec![
            chain("battery", vec!["SA1".into()], Trigger::Release),
            chain("axles", labels("SA", 10..=13), Trigger::Release),
            chain("cockpit", labels("SA", 14..=19), start_at("GA7")),
            chain("seats", labels("SA", 2..=4), start_at("GA14")),
            chain("wheels", vec!["SA9".into()], start_at("GA16")),
            chain("doors", labels("SA", 5..=8), start_at("GA17")),
            chain("harness", labels("SA", 20..=26), start_at("GA17")),
            chain("body-panels", labels("SA", 27..=33), start_at("GA17")),
        ];
        let prereq = |ga: &str, sas: &[&str]| (ga.to_string(), sas.iter().map(|s| s.to_string()).collect());
        let prerequisites = BTreeMap::from([
            prereq("GA6", &["SA13"]),
            prereq("GA13", &["SA19"]),
            prereq("GA14", &["SA1"]),
            prereq("GA16", &["SA4"]),
            prereq("GA17", &["SA9"]),
            prereq("GA22", &["SA26"]),
            prereq("GA24", &["SA7"]),
            prereq("GA25", &["SA8"]),
            prereq("GA27", &["SA33"]),
        ]);
        let mut service = BTreeMap::new();
        for s in &ga {
            let median = match s.as_str() {
                "GA3" | "GA4" | "GA5" => 10.0,
                "GA6" => 12.0,
                _ => 8.0,
            };
            service.insert(s.clone(), LogNormal::from_median(median, 0.15));
        }
        for i in 1..=33 {
            let dist = match i {
                1 => LogNormal::from_median(12.0, 0.4),
                5..=8 => LogNormal::from_median(5.0, 0.2),
                _ => LogNormal::from_median(4.0, 0.15),
            };
            service.insert(format!("SA{i}"), dist);
        }
        let mut sections = Vec::new();
        let mut operators = Vec::new();
        for (name, stations, prefix, size) in [
            ("ga-front", labels("GA", 0..=4), "gf", 7),
            ("ga-middle", labels("GA", 5..=13), "gm", 11),
            ("ga-rear", labels("GA", 14..=27), "gr", 16),
            ("sa-a", labels("SA", 1..=13), "sa", 15),
            ("sa-b", labels("SA", 14..=33), "sb", 22),
        ] {
            let (sec, ops) = pool(name, stations, prefix, size);
            sections.push(sec);
            operators.extend(ops);
        }
        LineConfig {
            ga_stations: ga,
            sa_chains,
            prerequisites,
            service,
            calendar: Calendar::default(),
            start: "2017-01-02T08:00:00Z".into(),
            transfer_minutes: 1.0,
            arrival: Arrival::Paced {
                mu: 25f64.ln(),
                sigma: 0.1,
            },
            sections,
            operators,
            rework: Vec::new(),
            car_attributes: CarAttributes::default(),
            object_layer: ObjectLayerConfig::default(),
            injections: Vec::new(),
        }
    }

    /// Saturated line whose door chain (SA5..SA7, consumed at GA24) runs
    /// ahead of the line with long, variable service times, so that blocking
    /// between the door stations limits output.
    pub fn door_constrained() -> Self {
        let mut c = Self::default_line();
        c.arrival = Arrival::Saturated;
        for ch in &mut c.sa_chains {
            if ch.name == "doors" {
                ch.trigger = Trigger::Release;
            }
        }
        for s in ["SA5", "SA6", "SA7"] {
            c.service.insert(s.into(), LogNormal::from_median(10.0, 0.6));
        }
        c
    }

    /// Dutch factory: part of the front-section crew works twice as fast, and
    /// a fast GA4 leaves rework for GA5.
    pub fn factory_nl() -> Self {
        let mut c = Self::factory_base();
        for op in c.operators.iter_mut().filter(|o| o.id == "gf1" || o.id == "gf2") {
            op.speed = 2.0;
        }
        c.rework.push(ReworkSpec {
            upstream: "GA4".into(),
            downstream: "GA5".into(),
            coefficient: 1.0,
        });
        c.car_attributes.cities = weighted(&[("Amsterdam", 1.0), ("Rotterdam", 1.0), ("Utrecht", 1.0)]);
        c
    }

    /// Belgian factory: homogeneous crew, no rework coupling.
    pub fn factory_be() -> Self {
        let mut c = Self::factory_base();
        c.car_attributes.cities = weighted(&[("Brussels", 1.0), ("Antwerp", 1.0), ("Ghent", 1.0)]);
        c
    }

    fn factory_base() -> Self {
        let mut c = Self::default_line();
        c.service.insert("GA4".into(), LogNormal::from_median(10.0, 0.08));
        c
    }

    pub fn start_timestamp(&self) -> Result<Timestamp> {
        parse_timestamp(&self.start, None).ok_or_else(|| Error::Config(format!("bad start instant `{}`", self.start)))
    }

    pub fn all_stations(&self) -> Vec<String> {
        let mut v = self.ga_stations.clone();
        for c in &self.sa_chains {
            v.extend(c.stations.iter().cloned());
        }
        v
    }

    pub fn has_station(&self, label: &str) -> bool {
        self.ga_stations.iter().any(|s| s == label) || self.sa_chains.iter().any(|c| c.stations.iter().any(|s| s == label))
    }

    /// Returns a copy with `spec` appended to the injections.
    pub fn apply_injection(&self, spec: impl Into<Injection>) -> Result<LineConfig> {
        let spec = spec.into();
        if !self.has_station(spec.station()) {
            return Err(Error::UnknownStation(spec.station().to_string()));
        }
        let mut c = self.clone();
        c.injections.push(spec);
        c.validate()?;
        Ok(c)
    }

    /// Chain index consumed by each general-assembly station.
    pub fn validate(&self) -> Result<()> {
        Topology::compile(self).map(|_| ())
    }

    /// Station whose completion releases a car (or item) towards `station`:
    /// the route predecessor, the trigger station for the first station of a
    /// chain, `None` for GA0 and release-triggered chains.
    pub fn upstream_map(&self) -> BTreeMap<String, Option<String>> {
        let mut m = BTreeMap::new();
        for (i, s) in self.ga_stations.iter().enumerate() {
            m.insert(s.clone(), i.checked_sub(1).map(|j| self.ga_stations[j].clone()));
        }
        for c in &self.sa_chains {
            for (i, s) in c.stations.iter().enumerate() {
                let up = match (i, &c.trigger) {
                    (0, Trigger::Release) => None,
                    (0, Trigger::Start(g)) => Some(g.clone()),
                    _ => Some(c.stations[i - 1].clone()),
                };
                m.insert(s.clone(), up);
            }
        }
        m
    }

    /// Designed process model: the general-assembly sequence with every
    /// chain in parallel to the stations between its trigger and consumer.
    pub fn reference_tree(&self) -> Result<ProcessTree> {
        let topo = Topology::compile(self)?;
        let intervals: Vec<(usize, usize, usize)> = topo
            .chains
            .iter()
            .enumerate()
            .map(|(i, c)| (c.trigger_ga.unwrap_or(0), c.consumer_ga - 1, i))
            .collect();
        for a in &intervals {
            for b in &intervals {
                let nested = (a.0 <= b.0 && b.1 <= a.1) || (b.0 <= a.0 && a.1 <= b.1);
                let disjoint = a.1 < b.0 || b.1 < a.0;
                if !nested && !disjoint {
                    return Err(Error::Config(format!(
                        "chains `{}` and `{}` overlap without nesting",
                        self.sa_chains[a.2].name, self.sa_chains[b.2].name
                    )));
                }
            }
        }
        let all: Vec<usize> = (0..intervals.len()).collect();
        Ok(self.segment(0, self.ga_stations.len() - 1, &intervals, &all).flattened())
    }

    fn chain_tree(&self, chain: usize) -> ProcessTree {
        let st = &self.sa_chains[chain].stations;
        match st.as_slice() {
            [one] => ProcessTree::activity(one.clone()),
            _ => ProcessTree::seq(st.iter().map(|x| ProcessTree::activity(x.clone())).collect()),
        }
    }

    fn segment(&self, lo: usize, hi: usize, iv: &[(usize, usize, usize)], inside: &[usize]) -> ProcessTree {
        let span = |i: usize| (iv[i].0, iv[i].1);
        let contains = |outer: usize, inner: usize| iv[outer].0 <= iv[inner].0 && iv[inner].1 <= iv[outer].1;
        // chains not strictly inside another one
        let mut maximal: Vec<usize> = inside
            .iter()
            .copied()
            .filter(|&i| !inside.iter().any(|&j| contains(j, i) && span(j) != span(i)))
            .collect();
        maximal.sort_by_key(|&i| (iv[i].0, i));
        let mut parts = Vec::new();
        let mut pos = lo;
        let mut k = 0;
        while k < maximal.len() {
            let (s, e, _) = iv[maximal[k]];
            while pos < s {
                parts.push(ProcessTree::activity(self.ga_stations[pos].clone()));
                pos += 1;
            }
            // chains sharing this exact interval run side by side
            let mut branches = Vec::new();
            while k < maximal.len() && span(maximal[k]) == (s, e) {
                branches.push(self.chain_tree(iv[maximal[k]].2));
                k += 1;
            }
            let nested: Vec<usize> = inside
                .iter()
                .copied()
                .filter(|&j| s <= iv[j].0 && iv[j].1 <= e && span(j) != (s, e))
                .collect();
            branches.push(self.segment(s, e, iv, &nested));
            parts.push(ProcessTree::par(branches));
            pos = e + 1;
        }
        while pos <= hi {
            parts.push(ProcessTree::activity(self.ga_stations[pos].clone()));
            pos += 1;
        }
        if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            ProcessTree::seq(parts)
        }
    }
}

/// Compiled, index-based view of a validated configuration.
#[derive(Debug, Clone)]
pub(crate) struct Topology {
    pub labels: Vec<String>,
    pub index: HashMap<String, usize>,
    /// Route 0 is the general-assembly line, route `1 + c` chain `c`.
    pub routes: Vec<Vec<usize>>,
    pub chains: Vec<ChainInfo>,
    pub section_of: Vec<usize>,
    pub section_ops: Vec<Vec<usize>>,
    /// Sub-assembly stations whose output each station waits for.
    pub consumes: Vec<Vec<usize>>,
    /// Chains triggered when a car starts at each station.
    pub triggers: Vec<Vec<usize>>,
    pub release_chains: Vec<usize>,
    /// Queue capacity in front of each station.
    pub buffer: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct ChainInfo {
    pub trigger_ga: Option<usize>,
    /// Consumer of the chain's final output.
    pub consumer_ga: usize,
}

impl Topology {
    pub fn compile(cfg: &LineConfig) -> Result<Topology> {
        let bad = |m: String| Err(Error::Config(m));
        cfg.calendar.validate()?;
        cfg.start_timestamp()?;
        if cfg.ga_stations.is_empty() {
            return bad("no general-assembly stations".into());
        }
        if !(cfg.transfer_minutes >= 0.0 && cfg.transfer_minutes.is_finite()) {
            return bad("transfer_minutes must be a non-negative number".into());
        }
        let mut labels = Vec::new();
        let mut routes = vec![Vec::new()];
        let mut station_route = Vec::new();
        let mut station_pos = Vec::new();
        let mut index = HashMap::new();
        let mut add = |label: &String, route: usize, pos: usize, labels: &mut Vec<String>| -> Result<usize> {
            if index.insert(label.clone(), labels.len()).is_some() {
                return Err(Error::Config(format!("station `{label}` defined twice")));
            }
            labels.push(label.clone());
            station_route.push(route);
            station_pos.push(pos);
            Ok(labels.len() - 1)
        };
        for (p, s) in cfg.ga_stations.iter().enumerate() {
            let i = add(s, 0, p, &mut labels)?;
            routes[0].push(i);
        }
        for (c, ch) in cfg.sa_chains.iter().enumerate() {
            if ch.stations.is_empty() {
                return bad(format!("chain `{}` has no stations", ch.name));
            }
            let mut r = Vec::new();
            for (p, s) in ch.stations.iter().enumerate() {
                r.push(add(s, c + 1, p, &mut labels)?);
            }
            routes.push(r);
        }
        let n = labels.len();
        let ga_pos = |s: &str| cfg.ga_stations.iter().position(|g| g == s);

        // consumers
        let mut consumer_of: Vec<Option<usize>> = vec![None; n];
        let mut consumes = vec![Vec::new(); n];
        for (ga, sas) in &cfg.prerequisites {
            let Some(gp) = ga_pos(ga) else {
                return bad(format!("prerequisite key `{ga}` is not a general-assembly station"));
            };
            for sa in sas {
                let Some(&i) = index.get(sa).filter(|&&i| station_route[i] > 0) else {
                    return bad(format!("prerequisite `{sa}` is not a sub-assembly station"));
                };
                if consumer_of[i].replace(gp).is_some() {
                    return bad(format!("output of `{sa}` consumed twice"));
                }
                consumes[routes[0][gp]].push(i);
            }
        }
        let mut triggers = vec![Vec::new(); n];
        let mut release_chains = Vec::new();
        let mut chains = Vec::new();
        for (c, ch) in cfg.sa_chains.iter().enumerate() {
            let route = &routes[c + 1];
            let Some(cons) = consumer_of[route[route.len() - 1]] else {
                return bad(format!("output of chain `{}` is never consumed", ch.name));
            };
            let first_use = route.iter().filter_map(|&i| consumer_of[i]).min().unwrap_or(cons);
            let trigger_ga = match &ch.trigger {
                Trigger::Release => {
                    release_chains.push(c);
                    None
                }
                Trigger::Start(g) => {
                    let Some(gp) = ga_pos(g) else {
                        return bad(format!("chain `{}` triggered by unknown station `{g}`", ch.name));
                    };
                    triggers[routes[0][gp]].push(c);
                    Some(gp)
                }
            };
            if trigger_ga.is_some_and(|t| t >= first_use) {
                return bad(format!(
                    "cyclic prerequisite topology: chain `{}` is triggered at or after its consumer `{}`",
                    ch.name, cfg.ga_stations[first_use]
                ));
            }
            chains.push(ChainInfo {
                trigger_ga,
                consumer_ga: cons,
            });
        }

        for s in &labels {
            let Some(d) = cfg.service.get(s) else {
                return bad(format!("no service distribution for `{s}`"));
            };
            if !(d.sigma >= 0.0 && d.mu.is_finite() && d.sigma.is_finite()) {
                return bad(format!("bad service distribution for `{s}`"));
            }
        }
        if let Arrival::Paced { mu, sigma } = cfg.arrival {
            if !(mu.is_finite() && sigma.is_finite() && sigma >= 0.0) {
                return bad("bad arrival distribution".into());
            }
        }

        let op_index: HashMap<&str, usize> = cfg.operators.iter().enumerate().map(|(i, o)| (o.id.as_str(), i)).collect();
        if op_index.len() != cfg.operators.len() {
            return bad("duplicate operator id".into());
        }
        for o in &cfg.operators {
            if !(o.speed > 0.0 && o.speed.is_finite()) {
                return bad(format!("operator `{}` needs a positive speed factor", o.id));
            }
            if o.preferences.values().any(|w| !(*w >= 0.0 && w.is_finite())) {
                return bad(format!("operator `{}` has a negative preference", o.id));
            }
        }
        let mut section_of = vec![usize::MAX; n];
        let mut section_ops = Vec::new();
        let mut op_used = vec![false; cfg.operators.len()];
        for (k, sec) in cfg.sections.iter().enumerate() {
            if sec.operators.is_empty() {
                return bad(format!("section `{}` has no operators", sec.name));
            }
            for s in &sec.stations {
                let Some(&i) = index.get(s) else {
                    return Err(Error::UnknownStation(s.clone()));
                };
                if section_of[i] != usize::MAX {
                    return bad(format!("station `{s}` in two sections"));
                }
                section_of[i] = k;
            }
            let mut ops = Vec::new();
            for o in &sec.operators {
                let Some(&oi) = op_index.get(o.as_str()) else {
                    return bad(format!("unknown operator `{o}`"));
                };
                if std::mem::replace(&mut op_used[oi], true) {
                    return bad(format!("operator `{o}` in two sections"));
                }
                ops.push(oi);
            }
            section_ops.push(ops);
        }
        if let Some(i) = section_of.iter().position(|&s| s == usize::MAX) {
            return bad(format!("station `{}` is in no section", labels[i]));
        }
        for r in &cfg.rework {
            for s in [&r.upstream, &r.downstream] {
                if !index.contains_key(s) {
                    return Err(Error::UnknownStation(s.clone()));
                }
            }
            if !(r.coefficient >= 0.0 && r.coefficient.is_finite()) {
                return bad("rework coefficient must be non-negative".into());
            }
        }
        let ca = &cfg.car_attributes;
        for list in [&ca.colors, &ca.cities] {
            if list.is_empty() || list.iter().any(|w| !(w.weight >= 0.0)) || list.iter().all(|w| w.weight == 0.0) {
                return bad("car attribute lists need non-negative weights with a positive total".into());
            }
        }
        let ol = &cfg.object_layer;
        if ol.products_per_order.min == 0 || ol.products_per_order.min > ol.products_per_order.max {
            return bad("products_per_order needs 1 <= min <= max".into());
        }

        let mut buffer = vec![0; n];
        for inj in &cfg.injections {
            let Some(&i) = index.get(inj.station()) else {
                return Err(Error::UnknownStation(inj.station().to_string()));
            };
            match inj {
                Injection::Deviation(d) => {
                    if !(0.0..=1.0).contains(&d.skip_probability) {
                        return bad(format!("skip probability {} outside [0,1]", d.skip_probability));
                    }
                }
                Injection::Drift(d) => {
                    if !(d.service_scale > 0.0 && d.service_scale.is_finite()) {
                        return bad("drift service_scale must be > 0".into());
                    }
                }
                Injection::Buffer(b) => {
                    if b.capacity > 0 {
                        if station_route[i] == 0 || station_pos[i] == 0 {
                            return bad(format!(
                                "buffer station `{}` must follow another station of its chain",
                                b.sa_station
                            ));
                        }
                        buffer[i] = b.capacity;
                    }
                }
            }
        }

        Ok(Topology {
            labels,
            index,
            routes,
            chains,
            section_of,
            section_ops,
            consumes,
            triggers,
            release_chains,
            buffer,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_topology_counts() {
        let c = LineConfig::default_line();
        c.validate().unwrap();
        assert_eq!(c.ga_stations.len(), 28);
        let sa: usize = c.sa_chains.iter().map(|ch| ch.stations.len()).sum();
        assert_eq!(sa, 33);
        for (ga, sa) in [("GA17", "SA9"), ("GA14", "SA1"), ("GA16", "SA4"), ("GA24", "SA7")] {
            assert!(c.prerequisites[ga].contains(sa));
        }
    }

    #[test]
    fn presets_validate() {
        for c in [LineConfig::door_constrained(), LineConfig::factory_nl(), LineConfig::factory_be()] {
            c.validate().unwrap();
        }
    }

    #[test]
    fn consumer_before_trigger_is_cyclic() {
        let mut c = LineConfig::default_line();
        c.sa_chains[3].trigger = Trigger::Start("GA20".into());
        assert!(matches!(c.validate(), Err(Error::Config(m)) if m.contains("cyclic")));
    }

    #[test]
    fn injection_on_unknown_station() {
        let c = LineConfig::default_line();
        let r = c.apply_injection(DriftSpec {
            station: "GA99".into(),
            onset: 0,
            service_scale: 2.0,
        });
        assert!(matches!(r, Err(Error::UnknownStation(_))));
        let d = c
            .apply_injection(DriftSpec {
                station: "GA5".into(),
                onset: 600,
                service_scale: 1.5,
            })
            .unwrap();
        assert_eq!(d.injections.len(), 1);
        assert!(c.injections.is_empty());
    }

    #[test]
    fn reference_tree_covers_all_stations() {
        let c = LineConfig::default_line();
        let t = c.reference_tree().unwrap();
        t.validate().unwrap();
        assert_eq!(t.activities().len(), 61);
        let (n, _, _) = t.lowest_common_ancestor("SA1", "GA0").unwrap();
        assert_eq!(n.operator_name(), "parallel");
    }
}
