//! System-dynamics layer: windowed SD-logs, lagged relations between their
//! variables, a one-stock model of the line and its Euler simulation.
//!
//! Model: the stock `cars_in_line` is fed by `arrival_rate` and drained by
//! `production_rate = min(capacity * a, available * min(1, a / d))`, where
//! `available` is the stock plus this step's arrivals, `a` the share of the
//! window that is working time and `d` the average production duration in
//! fully worked windows (optionally linear in the stock).

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::comparison::pearson;
use crate::error::{Error, Result};
use crate::event_model::TraceLog;
use crate::performance::{visits, Upstream};
use crate::simulator::{simulate, BufferSpec, LineConfig};
use crate::time::{format_timestamp, month_of, year_of, Calendar, Timestamp};

pub const MS_PER_HOUR: i64 = 3_600_000;
pub const MS_PER_DAY: i64 = 24 * MS_PER_HOUR;

/// Variables of an SD-log row that relations may refer to.
pub const VARIABLES: [&str; 5] = ["arrival_rate", "production_rate", "avg_service_time", "wip", "avg_flow_time"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdRow {
    pub window: usize,
    pub start: Timestamp,
    /// Worked time in the window relative to the fullest window.
    pub availability: f64,
    /// Cases whose first event falls in the window.
    pub arrival_rate: f64,
    /// Completed cases whose last event falls in the window.
    pub production_rate: f64,
    /// Mean service seconds of station visits completed in the window;
    /// carried over from the previous window when there are none.
    pub avg_service_time: f64,
    /// Time-weighted mean number of cases in flight.
    pub wip: f64,
    /// Mean worked flow time (seconds) of cases completed in the window;
    /// carried over like `avg_service_time`.
    pub avg_flow_time: f64,
}

impl SdRow {
    pub fn get(&self, var: &str) -> Option<f64> {
        Some(match var {
            "arrival_rate" => self.arrival_rate,
            "production_rate" => self.production_rate,
            "avg_service_time" => self.avg_service_time,
            "wip" => self.wip,
            "avg_flow_time" => self.avg_flow_time,
            "availability" => self.availability,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdLog {
    pub window_ms: i64,
    /// Worked milliseconds of the fullest window.
    pub worked_per_window: i64,
    pub rows: Vec<SdRow>,
    /// Worked flow seconds of every completed case, in completion order.
    pub flow_times: Vec<f64>,
}

impl SdLog {
    pub fn column(&self, var: &str) -> Result<Vec<f64>> {
        if !VARIABLES.contains(&var) && var != "availability" {
            return Err(Error::MissingVariable(var.to_string()));
        }
        Ok(self.rows.iter().map(|r| r.get(var).expect("known variable")).collect())
    }

    pub fn completed(&self) -> usize {
        self.flow_times.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "window",
            "start",
            "availability",
            "arrival_rate",
            "production_rate",
            "avg_service_time",
            "wip",
            "avg_flow_time",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.window.to_string(),
                format_timestamp(r.start),
                r.availability.to_string(),
                r.arrival_rate.to_string(),
                r.production_rate.to_string(),
                r.avg_service_time.to_string(),
                r.wip.to_string(),
                r.avg_flow_time.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Aggregate a log into windows of `window_ms`, aligned to multiples of the
/// window length since the epoch. A case is completed when it ends with the
/// most common final activity.
pub fn extract_sdlog(log: &TraceLog, window_ms: i64, calendar: &Calendar) -> Result<SdLog> {
    if window_ms < MS_PER_HOUR {
        return Err(Error::Parameter("SD window must be at least one hour".into()));
    }
    let spans: Vec<(&str, Timestamp, Timestamp, &str)> = log
        .traces
        .iter()
        .filter(|(_, t)| !t.is_empty())
        .map(|(c, t)| {
            let first = t.iter().map(|e| e.timestamp).min().expect("non-empty");
            let last = t.iter().map(|e| e.timestamp).max().expect("non-empty");
            (c.as_str(), first, last, t.last().expect("non-empty").activity.as_str())
        })
        .collect();
    let (Some(lo), Some(hi)) = (spans.iter().map(|s| s.1).min(), spans.iter().map(|s| s.2).max()) else {
        return Err(Error::Parameter("empty log".into()));
    };
    if window_ms > hi - lo {
        return Err(Error::Parameter("SD window longer than the log span".into()));
    }
    let origin = lo - lo.rem_euclid(window_ms);
    let n = ((hi - origin) / window_ms + 1) as usize;
    let idx = |t: Timestamp| ((t - origin) / window_ms) as usize;

    let mut end_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &spans {
        *end_counts.entry(s.3).or_default() += 1;
    }
    let end = end_counts.iter().max_by_key(|(a, c)| (**c, std::cmp::Reverse(**a))).map(|(a, _)| *a);

    let mut arrivals = vec![0.0; n];
    let mut production = vec![0.0; n];
    let mut wip_ms = vec![0i64; n];
    let mut flow: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut completions: Vec<(Timestamp, &str, f64)> = Vec::new();
    for &(case, first, last, act) in &spans {
        arrivals[idx(first)] += 1.0;
        if Some(act) == end {
            production[idx(last)] += 1.0;
            let f = calendar.worked_between(first, last) as f64 / 1000.0;
            flow[idx(last)].push(f);
            completions.push((last, case, f));
        }
        let mut w = idx(first);
        while w < n {
            let (ws, we) = (origin + w as i64 * window_ms, origin + (w as i64 + 1) * window_ms);
            if ws >= last {
                break;
            }
            wip_ms[w] += last.min(we) - first.max(ws);
            w += 1;
        }
    }
    completions.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)));

    let (vs, _) = visits(log, calendar, &Upstream::PreviousComplete);
    let mut service: Vec<Vec<f64>> = vec![Vec::new(); n];
    for v in &vs {
        service[idx(v.complete)].push(v.service);
    }

    let worked: Vec<i64> = (0..n)
        .map(|w| {
            let s = origin + w as i64 * window_ms;
            calendar.worked_between(s, s + window_ms)
        })
        .collect();
    let worked_ref = worked.iter().copied().max().unwrap_or(0);
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let (mut svc, mut ft) = (0.0, 0.0);
    let rows = (0..n)
        .map(|w| {
            svc = mean(&service[w]).unwrap_or(svc);
            ft = mean(&flow[w]).unwrap_or(ft);
            SdRow {
                window: w,
                start: origin + w as i64 * window_ms,
                availability: if worked_ref > 0 { worked[w] as f64 / worked_ref as f64 } else { 1.0 },
                arrival_rate: arrivals[w],
                production_rate: production[w],
                avg_service_time: svc,
                wip: wip_ms[w] as f64 / window_ms as f64,
                avg_flow_time: ft,
            }
        })
        .collect();
    Ok(SdLog {
        window_ms,
        worked_per_window: if worked_ref > 0 { worked_ref } else { window_ms },
        rows,
        flow_times: completions.into_iter().map(|c| c.2).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub source: String,
    pub target: String,
    /// Windows by which the target trails the source.
    pub lag: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relations: Vec<Relation>,
    pub notices: Vec<String>,
}

/// Pearson correlation of `source[t]` with `target[t + lag]` for every
/// ordered pair of distinct variables; the best lag per pair is reported when
/// its |r| reaches `threshold`.
pub fn detect_relations(sd: &SdLog, max_lag: usize, threshold: f64) -> Result<RelationReport> {
    let n = sd.rows.len();
    if n < max_lag + 10 {
        return Err(Error::SeriesTooShort {
            len: n,
            needed: max_lag + 10,
        });
    }
    let cols: Vec<(&str, Vec<f64>)> = VARIABLES.iter().map(|v| (*v, sd.column(v).expect("known"))).collect();
    let mut report = RelationReport::default();
    for (name, c) in &cols {
        if c.iter().all(|x| *x == c[0]) {
            report.notices.push(format!("{name} is constant; its pairs are skipped"));
        }
    }
    for (sname, s) in &cols {
        for (tname, t) in &cols {
            if sname == tname {
                continue;
            }
            let best = (0..=max_lag)
                .filter_map(|lag| pearson(&s[..n - lag], &t[lag..]).map(|r| (lag, r)))
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)));
            if let Some((lag, r)) = best {
                if r.abs() >= threshold {
                    report.relations.push(Relation {
                        source: sname.to_string(),
                        target: tname.to_string(),
                        lag,
                        strength: r.clamp(-1.0, 1.0),
                    });
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stock {
    pub name: String,
    pub unit: String,
    pub initial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub name: String,
    pub unit: String,
    pub from: Option<String>,
    pub to: Option<String>,
    pub equation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub unit: String,
    pub equation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub from: String,
    pub to: String,
}

/// Fitted values the equations refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub origin: Timestamp,
    pub window_ms: i64,
    /// Cars per fully worked window.
    pub capacity: f64,
    /// Average production duration in fully worked windows at zero stock.
    pub duration_intercept: f64,
    /// Change of the duration per car in the line.
    pub duration_wip_slope: f64,
    /// Arrivals per step, repeated when simulating past its end.
    pub arrivals: Vec<f64>,
    /// Working share per step, repeated likewise.
    pub availability: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockFlowModel {
    pub stocks: Vec<Stock>,
    pub flows: Vec<Flow>,
    pub variables: Vec<Variable>,
    pub links: Vec<Link>,
    pub parameters: Parameters,
}

pub const STOCK: &str = "cars_in_line";
pub const INFLOW: &str = "arrival_rate";
pub const OUTFLOW: &str = "production_rate";
pub const DURATION: &str = "avg_production_duration";

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Fit the one-stock line model. The duration becomes linear in the stock
/// when `relations` link `wip` and `avg_flow_time` at lag 0.
pub fn build_stock_flow(sd: &SdLog, relations: &[Relation]) -> Result<StockFlowModel> {
    for r in relations {
        for v in [&r.source, &r.target] {
            if !VARIABLES.contains(&v.as_str()) {
                return Err(Error::MissingVariable(v.clone()));
            }
        }
    }
    if sd.rows.is_empty() {
        return Err(Error::MissingVariable(INFLOW.into()));
    }
    if sd.completed() == 0 {
        return Err(Error::MissingVariable("avg_flow_time".into()));
    }
    let unit = sd.worked_per_window as f64 / 1000.0;
    let capacity = sd
        .rows
        .iter()
        .filter(|r| r.availability > 0.0)
        .map(|r| r.production_rate / r.availability)
        .fold(0.0, f64::max);
    let mut intercept = mean(&sd.flow_times) / unit;
    let mut slope = 0.0;
    let linked = relations.iter().any(|r| {
        r.lag == 0
            && ((r.source == "wip" && r.target == "avg_flow_time") || (r.source == "avg_flow_time" && r.target == "wip"))
    });
    if linked {
        let pts: Vec<(f64, f64)> = sd
            .rows
            .iter()
            .filter(|r| r.production_rate > 0.0)
            .map(|r| (r.wip, r.avg_flow_time / unit))
            .collect();
        let (mx, my) = (mean(&pts.iter().map(|p| p.0).collect::<Vec<_>>()), mean(&pts.iter().map(|p| p.1).collect::<Vec<_>>()));
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx > 0.0 {
            slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
            intercept = my - slope * mx;
        }
    }
    let mut links = vec![
        Link {
            from: STOCK.into(),
            to: OUTFLOW.into(),
        },
        Link {
            from: DURATION.into(),
            to: OUTFLOW.into(),
        },
    ];
    if slope != 0.0 {
        links.push(Link {
            from: STOCK.into(),
            to: DURATION.into(),
        });
    }
    Ok(StockFlowModel {
        stocks: vec![Stock {
            name: STOCK.into(),
            unit: "cars".into(),
            initial: 0.0,
        }],
        flows: vec![
            Flow {
                name: INFLOW.into(),
                unit: "cars/step".into(),
                from: None,
                to: Some(STOCK.into()),
                equation: "arrivals[t]".into(),
            },
            Flow {
                name: OUTFLOW.into(),
                unit: "cars/step".into(),
                from: Some(STOCK.into()),
                to: None,
                equation: format!(
                    "min(capacity * availability[t], ({STOCK} + {INFLOW}) * min(1, availability[t] / {DURATION}))"
                ),
            },
        ],
        variables: vec![Variable {
            name: DURATION.into(),
            unit: "steps".into(),
            equation: format!("duration_intercept + duration_wip_slope * {STOCK}"),
        }],
        links,
        parameters: Parameters {
            origin: sd.rows[0].start,
            window_ms: sd.window_ms,
            capacity,
            duration_intercept: intercept,
            duration_wip_slope: slope,
            arrivals: sd.rows.iter().map(|r| r.arrival_rate).collect(),
            availability: sd.rows.iter().map(|r| r.availability).collect(),
        },
    })
}

/// Constant overrides of model quantities. Keys: `arrival_rate`,
/// `production_rate`, `avg_production_duration`, `capacity`, `availability`
/// and `cars_in_line` (initial stock).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub overrides: BTreeMap<String, f64>,
}

const OVERRIDABLE: [&str; 6] = [INFLOW, OUTFLOW, DURATION, "capacity", "availability", STOCK];

impl Scenario {
    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.overrides.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdStep {
    pub step: usize,
    pub start: Timestamp,
    /// Stock at the start of the step.
    pub cars_in_line: f64,
    pub arrival_rate: f64,
    pub production_rate: f64,
    pub avg_production_duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clamp {
    pub step: usize,
    /// How far below zero the stock would have gone.
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdTable {
    pub steps: Vec<SdStep>,
    pub final_stock: f64,
    pub clamps: Vec<Clamp>,
}

impl SdTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "start", STOCK, INFLOW, OUTFLOW, DURATION])?;
        for s in &self.steps {
            w.write_record([
                s.step.to_string(),
                format_timestamp(s.start),
                s.cars_in_line.to_string(),
                s.arrival_rate.to_string(),
                s.production_rate.to_string(),
                s.avg_production_duration.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn cyclic(v: &[f64], t: usize, default: f64) -> f64 {
    if v.is_empty() {
        default
    } else {
        v[t % v.len()]
    }
}

/// Forward Euler with one window per step.
pub fn simulate_sd(model: &StockFlowModel, steps: usize, scenario: &Scenario) -> Result<SdTable> {
    if steps == 0 {
        return Err(Error::Parameter("SD simulation needs at least one step".into()));
    }
    if let Some(k) = scenario.overrides.keys().find(|k| !OVERRIDABLE.contains(&k.as_str())) {
        return Err(Error::MissingVariable(k.clone()));
    }
    let p = &model.parameters;
    let ov = |k: &str| scenario.overrides.get(k).copied();
    let initial = model.stocks.iter().find(|s| s.name == STOCK).map_or(0.0, |s| s.initial);
    let mut stock = ov(STOCK).unwrap_or(initial);
    let capacity = ov("capacity").unwrap_or(p.capacity);
    let mut out = Vec::with_capacity(steps);
    let mut clamps = Vec::new();
    for t in 0..steps {
        let a = ov("availability").unwrap_or_else(|| cyclic(&p.availability, t, 1.0));
        let inflow = ov(INFLOW).unwrap_or_else(|| cyclic(&p.arrivals, t, 0.0));
        let d = ov(DURATION).unwrap_or(p.duration_intercept + p.duration_wip_slope * stock);
        let outflow = ov(OUTFLOW).unwrap_or_else(|| {
            let available = stock + inflow;
            let share = if d > 0.0 { (a / d).min(1.0) } else { 1.0 };
            (capacity * a).min(available * share)
        });
        for (name, v) in [(STOCK, stock), (INFLOW, inflow), (OUTFLOW, outflow), (DURATION, d)] {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("{name} at step {t}")));
            }
        }
        out.push(SdStep {
            step: t,
            start: p.origin + t as i64 * p.window_ms,
            cars_in_line: stock,
            arrival_rate: inflow,
            production_rate: outflow,
            avg_production_duration: d,
        });
        stock += inflow - outflow;
        if stock < 0.0 {
            clamps.push(Clamp { step: t, deficit: -stock });
            stock = 0.0;
        }
    }
    Ok(SdTable {
        steps: out,
        final_stock: stock,
        clamps,
    })
}

/// Multipliers a buffer applies to the fitted model, measured on paired
/// simulator runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferEffect {
    pub buffer: BufferSpec,
    pub arrival_scale: f64,
    pub capacity_scale: f64,
    pub duration_scale: f64,
}

impl BufferEffect {
    pub fn identity(buffer: BufferSpec) -> Self {
        BufferEffect {
            buffer,
            arrival_scale: 1.0,
            capacity_scale: 1.0,
            duration_scale: 1.0,
        }
    }
}

/// Steady part of a paired comparison: the first 80% of the shorter SD-log.
fn steady_windows(a: &SdLog, b: &SdLog) -> usize {
    (a.rows.len().min(b.rows.len()) * 4 / 5).max(1)
}

fn flow_weighted(sd: &SdLog, h: usize) -> f64 {
    let rows = &sd.rows[..h];
    let n: f64 = rows.iter().map(|r| r.production_rate).sum();
    if n == 0.0 {
        return 0.0;
    }
    rows.iter().map(|r| r.production_rate * r.avg_flow_time).sum::<f64>() / n
}

/// Production per open window over the first `h` windows.
fn open_rate(sd: &SdLog, h: usize) -> f64 {
    let open: f64 = sd.rows[..h].iter().map(|r| r.availability).sum();
    if open == 0.0 {
        return 0.0;
    }
    sd.rows[..h].iter().map(|r| r.production_rate).sum::<f64>() / open
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        1.0
    }
}

/// Simulate the line with and without the buffer on the same seed and
/// compare their SD-logs over the steady part of the runs.
pub fn calibrate_buffer(
    config: &LineConfig,
    buffer: &BufferSpec,
    seed: u64,
    cars: usize,
    window_ms: i64,
) -> Result<BufferEffect> {
    if !config.sa_chains.iter().any(|c| c.stations.contains(&buffer.sa_station)) {
        return Err(Error::UnknownStation(buffer.sa_station.clone()));
    }
    if buffer.capacity == 0 {
        return Ok(BufferEffect::identity(buffer.clone()));
    }
    let buffered = config.apply_injection(buffer.clone())?;
    let base = run_sdlog(config, seed, cars, window_ms)?;
    let with = run_sdlog(&buffered, seed, cars, window_ms)?;
    let h = steady_windows(&base, &with);
    let arrivals = |sd: &SdLog| sd.rows[..h].iter().map(|r| r.arrival_rate).sum::<f64>();
    Ok(BufferEffect {
        buffer: buffer.clone(),
        arrival_scale: ratio(arrivals(&with), arrivals(&base)),
        capacity_scale: ratio(open_rate(&with, h), open_rate(&base, h)),
        duration_scale: ratio(flow_weighted(&with, h), flow_weighted(&base, h)),
    })
}

/// SD-log of one simulator run.
pub fn run_sdlog(config: &LineConfig, seed: u64, cars: usize, window_ms: i64) -> Result<SdLog> {
    let out = simulate(config, seed, cars)?;
    let traces = out.log.build_traces("case")?;
    extract_sdlog(&traces, window_ms, &config.calendar)
}

/// Cars produced within the first windows of paired runs without and with
/// the buffer: (baseline, buffered, windows compared).
pub fn paired_production(
    config: &LineConfig,
    buffer: &BufferSpec,
    seed: u64,
    cars: usize,
    window_ms: i64,
) -> Result<(f64, f64, usize)> {
    let base = run_sdlog(config, seed, cars, window_ms)?;
    let with = run_sdlog(&config.apply_injection(buffer.clone())?, seed, cars, window_ms)?;
    let h = steady_windows(&base, &with);
    let total = |sd: &SdLog| sd.rows[..h].iter().map(|r| r.production_rate).sum::<f64>();
    Ok((total(&base), total(&with), h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub step: usize,
    pub start: Timestamp,
    pub baseline: f64,
    pub scenario: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodDelta {
    /// Calendar month, `YYYY-MM`.
    pub period: String,
    pub baseline: f64,
    pub scenario: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioComparison {
    pub effect: BufferEffect,
    pub rows: Vec<ScenarioRow>,
    pub periods: Vec<PeriodDelta>,
    pub total_delta: f64,
}

impl ScenarioComparison {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "start", "baseline_production", "scenario_production", "delta"])?;
        for r in &self.rows {
            w.write_record([
                r.step.to_string(),
                format_timestamp(r.start),
                r.baseline.to_string(),
                r.scenario.to_string(),
                r.delta.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Production of the baseline model against the model modified by the
/// buffer's effect, per step and per calendar month.
pub fn whatif_buffer(baseline: &StockFlowModel, effect: &BufferEffect, steps: usize) -> Result<ScenarioComparison> {
    let mut scenario = baseline.clone();
    let p = &mut scenario.parameters;
    p.arrivals.iter_mut().for_each(|a| *a *= effect.arrival_scale);
    p.capacity *= effect.capacity_scale;
    p.duration_intercept *= effect.duration_scale;
    p.duration_wip_slope *= effect.duration_scale;
    let a = simulate_sd(baseline, steps, &Scenario::default())?;
    let b = simulate_sd(&scenario, steps, &Scenario::default())?;
    let rows: Vec<ScenarioRow> = a
        .steps
        .iter()
        .zip(&b.steps)
        .map(|(x, y)| ScenarioRow {
            step: x.step,
            start: x.start,
            baseline: x.production_rate,
            scenario: y.production_rate,
            delta: y.production_rate - x.production_rate,
        })
        .collect();
    let mut periods: Vec<PeriodDelta> = Vec::new();
    for r in &rows {
        let label = format!("{:04}-{:02}", year_of(r.start), month_of(r.start));
        match periods.last_mut() {
            Some(p) if p.period == label => {
                p.baseline += r.baseline;
                p.scenario += r.scenario;
                p.delta += r.delta;
            }
            _ => periods.push(PeriodDelta {
                period: label,
                baseline: r.baseline,
                scenario: r.scenario,
                delta: r.delta,
            }),
        }
    }
    let total_delta = rows.iter().map(|r| r.delta).sum();
    Ok(ScenarioComparison {
        effect: effect.clone(),
        rows,
        periods,
        total_delta,
    })
}
