//! Process cubes: events indexed by dimensions with hierarchies, supporting
//! slice, dice, roll-up, drill-down and materialization of cells as sublogs.
//!
//! Dimensions bind at event level, so one case may have events in several
//! cells; [`ProcessCube::split_cases`] reports how many.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_model::{build_traces, field_value, AttrValue, EventLog, TraceLog, BUILTIN_FIELDS};
use crate::time::datetime;

/// Value used for events that lack a dimension's attribute.
pub const MISSING: &str = "(missing)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelKind {
    /// The attribute value itself.
    Value,
    /// Parent of the previous level's value.
    Map(BTreeMap<String, String>),
    Day,
    Month,
    Year,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub name: String,
    pub kind: LevelKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub attribute: String,
    /// Finest level first.
    pub levels: Vec<Level>,
    pub current: usize,
}

impl Dimension {
    /// Dimension over the raw values of `attribute`.
    pub fn flat(name: impl Into<String>, attribute: impl Into<String>) -> Self {
        let name = name.into();
        Dimension {
            levels: vec![Level {
                name: name.clone(),
                kind: LevelKind::Value,
            }],
            name,
            attribute: attribute.into(),
            current: 0,
        }
    }

    /// Day, month, year hierarchy over a timestamp attribute, at year level.
    pub fn time(name: impl Into<String>, attribute: impl Into<String>) -> Self {
        let level = |n: &str, kind| Level { name: n.into(), kind };
        Dimension {
            name: name.into(),
            attribute: attribute.into(),
            levels: vec![level("day", LevelKind::Day), level("month", LevelKind::Month), level("year", LevelKind::Year)],
            current: 2,
        }
    }

    /// Add a coarser level mapping values of the current top level.
    pub fn with_parent(mut self, level: impl Into<String>, mapping: BTreeMap<String, String>) -> Self {
        self.levels.push(Level {
            name: level.into(),
            kind: LevelKind::Map(mapping),
        });
        self
    }

    pub fn at_level(mut self, level: &str) -> Result<Self> {
        self.current = self
            .levels
            .iter()
            .position(|l| l.name == level)
            .ok_or_else(|| Error::UnknownValue {
                dim: self.name.clone(),
                value: level.to_string(),
            })?;
        Ok(self)
    }

    pub fn level_name(&self) -> &str {
        &self.levels[self.current].name
    }

    /// Value of `raw` at `level`; `None` when a mapping has no entry.
    fn value_at(&self, raw: Option<&AttrValue>, level: usize) -> Option<String> {
        let Some(raw) = raw else {
            return Some(MISSING.to_string());
        };
        let time = |f: fn(chrono::DateTime<chrono::Utc>) -> String| match raw {
            AttrValue::Time(t) => Some(f(datetime(*t))),
            other => Some(other.to_string()),
        };
        match &self.levels[level].kind {
            LevelKind::Value => Some(raw.to_string()),
            LevelKind::Day => time(|d| format!("{:04}-{:02}-{:02}", d.year(), d.month(), d.day())),
            LevelKind::Month => time(|d| format!("{:04}-{:02}", d.year(), d.month())),
            LevelKind::Year => time(|d| format!("{:04}", d.year())),
            LevelKind::Map(m) => {
                let below = self.value_at(Some(raw), level - 1)?;
                if below == MISSING {
                    return Some(below);
                }
                m.get(&below).cloned()
            }
        }
    }

    fn value(&self, raw: Option<&AttrValue>) -> String {
        self.value_at(raw, self.current).expect("hierarchy checked at build time")
    }
}

/// Read `child,parent` rows (an optional header `child,parent` is skipped).
pub fn parse_hierarchy_csv<R: Read>(input: R) -> Result<BTreeMap<String, String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut m = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Row {
                line: i as u64 + 1,
                message: "expected child,parent".into(),
            });
        }
        if i == 0 && &rec[0] == "child" && &rec[1] == "parent" {
            continue;
        }
        m.insert(rec[0].to_string(), rec[1].to_string());
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct ProcessCube<'a> {
    log: &'a EventLog,
    dims: Vec<Dimension>,
    /// Dimensions removed by slicing, with the values kept.
    sliced: Vec<(Dimension, BTreeSet<String>)>,
    selection: Vec<usize>,
}

pub fn build_cube(log: &EventLog, dims: Vec<Dimension>) -> Result<ProcessCube<'_>> {
    let mut names = BTreeSet::new();
    for d in &dims {
        if !log.has_field(&d.attribute) && !BUILTIN_FIELDS.contains(&d.attribute.as_str()) {
            return Err(Error::UnknownAttribute(d.attribute.clone()));
        }
        if !names.insert(&d.name) {
            return Err(Error::Parameter(format!("dimension `{}` given twice", d.name)));
        }
        if d.current >= d.levels.len() || d.levels.is_empty() || matches!(d.levels[0].kind, LevelKind::Map(_)) {
            return Err(Error::Parameter(format!("malformed hierarchy for `{}`", d.name)));
        }
        for e in &log.events {
            let raw = field_value(e, &d.attribute);
            for level in 0..d.levels.len() {
                if d.value_at(raw.as_ref(), level).is_none() {
                    return Err(Error::UnknownValue {
                        dim: format!("{} ({} level)", d.name, d.levels[level].name),
                        value: d.value_at(raw.as_ref(), level - 1).unwrap_or_default(),
                    });
                }
            }
        }
    }
    Ok(ProcessCube {
        log,
        dims,
        sliced: Vec::new(),
        selection: (0..log.events.len()).collect(),
    })
}

impl<'a> ProcessCube<'a> {
    pub fn dimensions(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn event_count(&self) -> usize {
        self.selection.len()
    }

    pub fn event_indices(&self) -> &[usize] {
        &self.selection
    }

    fn dim_index(&self, name: &str) -> Result<usize> {
        self.dims
            .iter()
            .position(|d| d.name == name)
            .ok_or_else(|| Error::UnknownDimension(name.to_string()))
    }

    fn value_of(&self, dim: &Dimension, event: usize) -> String {
        dim.value(field_value(&self.log.events[event], &dim.attribute).as_ref())
    }

    /// Values of a dimension among the selected events, at its current level.
    pub fn values(&self, dim: &str) -> Result<BTreeSet<String>> {
        let d = &self.dims[self.dim_index(dim)?];
        Ok(self.selection.iter().map(|&e| self.value_of(d, e)).collect())
    }

    /// Restrict the selection to `keep`. Values are checked against the
    /// dimension's domain in the base log, so restrictions commute.
    fn restrict(&self, i: usize, keep: &BTreeSet<String>) -> Result<Vec<usize>> {
        let d = &self.dims[i];
        let observed: BTreeSet<String> = (0..self.log.events.len()).map(|e| self.value_of(d, e)).collect();
        if let Some(v) = keep.iter().find(|v| !observed.contains(*v)) {
            return Err(Error::UnknownValue {
                dim: d.name.clone(),
                value: v.clone(),
            });
        }
        Ok(self.selection.iter().copied().filter(|&e| keep.contains(&self.value_of(d, e))).collect())
    }

    /// Keep events whose `dim` value is in `values` and drop the dimension.
    pub fn slice(&self, dim: &str, values: &[&str]) -> Result<ProcessCube<'a>> {
        let i = self.dim_index(dim)?;
        let keep: BTreeSet<String> = values.iter().map(|s| s.to_string()).collect();
        let selection = self.restrict(i, &keep)?;
        let mut c = self.clone();
        c.selection = selection;
        let d = c.dims.remove(i);
        c.sliced.push((d, keep));
        Ok(c)
    }

    /// Keep events matching every filter; all dimensions stay.
    pub fn dice(&self, filters: &BTreeMap<String, BTreeSet<String>>) -> Result<ProcessCube<'a>> {
        let mut c = self.clone();
        for (dim, keep) in filters {
            let i = c.dim_index(dim)?;
            c.selection = c.restrict(i, keep)?;
        }
        Ok(c)
    }

    pub fn roll_up(&self, dim: &str) -> Result<ProcessCube<'a>> {
        let i = self.dim_index(dim)?;
        if self.dims[i].current + 1 >= self.dims[i].levels.len() {
            return Err(Error::Hierarchy("coarser"));
        }
        let mut c = self.clone();
        c.dims[i].current += 1;
        Ok(c)
    }

    pub fn drill_down(&self, dim: &str) -> Result<ProcessCube<'a>> {
        let i = self.dim_index(dim)?;
        if self.dims[i].current == 0 {
            return Err(Error::Hierarchy("finer"));
        }
        let mut c = self.clone();
        c.dims[i].current -= 1;
        Ok(c)
    }

    /// Cell coordinates (one value per active dimension) to event indices.
    pub fn cells(&self) -> BTreeMap<Vec<String>, Vec<usize>> {
        let mut m: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
        for &e in &self.selection {
            let key = self.dims.iter().map(|d| self.value_of(d, e)).collect();
            m.entry(key).or_default().push(e);
        }
        m
    }

    /// Cases with events in more than one cell.
    pub fn split_cases(&self) -> usize {
        let mut cells_of: BTreeMap<&str, BTreeSet<Vec<String>>> = BTreeMap::new();
        for (key, evs) in self.cells() {
            for e in evs {
                if let Some(c) = self.log.events[e].case_id.as_deref() {
                    cells_of.entry(c).or_default().insert(key.clone());
                }
            }
        }
        cells_of.values().filter(|s| s.len() > 1).count()
    }

    /// Selected events as a log.
    pub fn to_event_log(&self) -> EventLog {
        EventLog {
            schema: self.log.schema.clone(),
            events: self.selection.iter().map(|&e| self.log.events[e].clone()).collect(),
        }
    }

    /// Sublog of one cell, traces rebuilt by `case_attr`. An empty cell gives
    /// an empty log.
    pub fn materialize(&self, coords: &[&str], case_attr: &str) -> Result<TraceLog> {
        if coords.len() != self.dims.len() {
            return Err(Error::Parameter(format!(
                "cell needs {} coordinates, got {}",
                self.dims.len(),
                coords.len()
            )));
        }
        for (d, v) in self.dims.iter().zip(coords) {
            if !self.values(&d.name)?.contains(*v) {
                return Err(Error::UnknownValue {
                    dim: d.name.clone(),
                    value: v.to_string(),
                });
            }
        }
        let key: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        let events = self.cells().remove(&key).unwrap_or_default();
        let sub = EventLog {
            schema: self.log.schema.clone(),
            events: events.into_iter().map(|e| self.log.events[e].clone()).collect(),
        };
        build_traces(&sub, case_attr)
    }

    /// Apply one query: `slice dim=v1[,v2..]`, `dice dim=v1,v2 [dim2=..]`,
    /// `rollup dim` or `drilldown dim`.
    pub fn apply(&self, query: &str) -> Result<ProcessCube<'a>> {
        let mut words = query.split_whitespace();
        let op = words.next().ok_or_else(|| Error::Parameter("empty cube query".into()))?;
        let args: Vec<&str> = words.collect();
        let assignment = |a: &str| -> Result<(String, BTreeSet<String>)> {
            let (d, vs) = a
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("expected dim=values, got `{a}`")))?;
            Ok((d.to_string(), vs.split(',').map(str::to_string).collect()))
        };
        match (op, args.as_slice()) {
            ("slice", [a]) => {
                let (d, vs) = assignment(a)?;
                self.slice(&d, &vs.iter().map(String::as_str).collect::<Vec<_>>())
            }
            ("dice", list) if !list.is_empty() => {
                let filters = list.iter().map(|a| assignment(a)).collect::<Result<BTreeMap<_, _>>>()?;
                self.dice(&filters)
            }
            ("rollup" | "roll_up", [d]) => self.roll_up(d),
            ("drilldown" | "drill_down", [d]) => self.drill_down(d),
            _ => Err(Error::Parameter(format!("malformed cube query `{query}`"))),
        }
    }

    /// Dimensions removed by slicing, with the values they were fixed to.
    pub fn sliced(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.sliced.iter().map(|(d, v)| (d.name.as_str(), v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_model::Event;
    use crate::time::parse_timestamp;

    fn log() -> EventLog {
        let rows = [
            ("white", "Brussels", "2017-03-01T09:00:00Z"),
            ("white", "Amsterdam", "2017-03-01T10:00:00Z"),
            ("blue", "Brussels", "2018-05-01T09:00:00Z"),
            ("white", "Brussels", "2019-01-01T09:00:00Z"),
            ("red", "Utrecht", "2018-01-01T09:00:00Z"),
        ];
        EventLog::from_events(
            rows.iter()
                .enumerate()
                .map(|(i, (c, city, t))| {
                    Event::new(format!("e{i}"), "GA0", parse_timestamp(t, None).unwrap())
                        .with_case(format!("car-{i}"))
                        .with_attr("color", AttrValue::Str(c.to_string()))
                        .with_attr("city", AttrValue::Str(city.to_string()))
                })
                .collect(),
        )
        .unwrap()
    }

    fn countries() -> BTreeMap<String, String> {
        [("Brussels", "Belgium"), ("Amsterdam", "Netherlands"), ("Utrecht", "Netherlands")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    fn dims() -> Vec<Dimension> {
        vec![
            Dimension::flat("color", "color"),
            Dimension::flat("location", "city").with_parent("country", countries()),
            Dimension::time("time", "timestamp"),
        ]
    }

    #[test]
    fn cell_contains_matching_events() {
        let l = log();
        let cube = build_cube(&l, dims()).unwrap();
        let cells = cube.cells();
        let key: Vec<String> = ["white", "Brussels", "2017"].iter().map(|s| s.to_string()).collect();
        assert_eq!(cells[&key], vec![0]);
    }

    #[test]
    fn no_dimensions_is_one_cell() {
        let l = log();
        let cube = build_cube(&l, vec![]).unwrap();
        let cells = cube.cells();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[&Vec::<String>::new()].len(), 5);
    }

    #[test]
    fn slice_years_and_dice() {
        let l = log();
        let cube = build_cube(&l, dims()).unwrap();
        let s = cube.slice("time", &["2017", "2018"]).unwrap();
        assert_eq!(s.dimensions().len(), 2);
        assert_eq!(s.event_count(), 4);
        let f = BTreeMap::from([
            ("color".to_string(), BTreeSet::from(["white".to_string(), "blue".to_string()])),
            ("time".to_string(), BTreeSet::from(["2017".to_string(), "2018".to_string()])),
        ]);
        assert_eq!(cube.dice(&f).unwrap().event_indices(), &[0, 1, 2]);
        assert!(matches!(cube.slice("time", &["1999"]), Err(Error::UnknownValue { .. })));
        assert!(matches!(cube.slice("weather", &["x"]), Err(Error::UnknownDimension(_))));
    }

    #[test]
    fn slices_commute_on_emptied_values() {
        let l = log();
        let cube = build_cube(&l, dims()).unwrap();
        let a = cube.slice("time", &["2017"]).unwrap().slice("color", &["red"]).unwrap();
        let b = cube.slice("color", &["red"]).unwrap().slice("time", &["2017"]).unwrap();
        assert_eq!(a.event_indices(), b.event_indices());
    }

    #[test]
    fn roll_up_merges_cities() {
        let l = log();
        let cube = build_cube(&l, vec![Dimension::flat("location", "city").with_parent("country", countries())]).unwrap();
        let up = cube.roll_up("location").unwrap();
        assert_eq!(up.values("location").unwrap(), BTreeSet::from(["Belgium".to_string(), "Netherlands".to_string()]));
        assert_eq!(up.drill_down("location").unwrap().cells(), cube.cells());
        assert!(matches!(up.roll_up("location"), Err(Error::Hierarchy(_))));
        assert!(matches!(cube.drill_down("location"), Err(Error::Hierarchy(_))));
    }

    #[test]
    fn unmapped_value_rejected() {
        let l = log();
        let mut m = countries();
        m.remove("Utrecht");
        let r = build_cube(&l, vec![Dimension::flat("location", "city").with_parent("country", m)]);
        assert!(matches!(r, Err(Error::UnknownValue { value, .. }) if value == "Utrecht"));
    }

    #[test]
    fn unknown_attribute_rejected() {
        let l = log();
        assert!(matches!(build_cube(&l, vec![Dimension::flat("w", "weather")]), Err(Error::UnknownAttribute(_))));
    }

    #[test]
    fn query_language() {
        let l = log();
        let cube = build_cube(&l, dims()).unwrap();
        let c = cube.apply("dice color=white,blue time=2017,2018").unwrap().apply("rollup location").unwrap();
        assert_eq!(c.event_count(), 3);
        assert!(cube.apply("explode color").is_err());
    }

    #[test]
    fn hierarchy_csv() {
        let m = parse_hierarchy_csv("child,parent\nBrussels, Belgium\n".as_bytes()).unwrap();
        assert_eq!(m["Brussels"], "Belgium");
    }

    #[test]
    fn materialize_cell() {
        let l = log();
        let cube = build_cube(&l, vec![Dimension::flat("color", "color")]).unwrap();
        let t = cube.materialize(&["white"], "case").unwrap();
        assert_eq!(t.event_count(), 3);
        assert!(cube.materialize(&["green"], "case").is_err());
    }
}
