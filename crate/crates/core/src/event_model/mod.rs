//! Event data: flat event logs, per-case traces, filtering and interchange.

mod csv_io;
mod json_io;
mod predicate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{format_timestamp, Timestamp};

pub use csv_io::{parse_csv_log, write_csv_log, ColumnMapping};
pub use json_io::{parse_json_log, write_json_log};
pub use predicate::Predicate;

/// Transactional lifecycle of an event. `Start` orders before `Complete`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lifecycle {
    Start,
    Complete,
}

impl Lifecycle {
    pub fn as_str(self) -> &'static str {
        match self {
            Lifecycle::Start => "start",
            Lifecycle::Complete => "complete",
        }
    }

    pub fn parse(s: &str) -> Option<Lifecycle> {
        match s.trim().to_ascii_lowercase().as_str() {
            "start" => Some(Lifecycle::Start),
            "complete" | "" => Some(Lifecycle::Complete),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrType {
    String,
    Integer,
    Real,
    Instant,
}

impl AttrType {
    pub fn as_str(self) -> &'static str {
        match self {
            AttrType::String => "string",
            AttrType::Integer => "integer",
            AttrType::Real => "real",
            AttrType::Instant => "instant",
        }
    }

    pub fn parse(s: &str) -> Option<AttrType> {
        match s {
            "string" | "str" => Some(AttrType::String),
            "integer" | "int" => Some(AttrType::Integer),
            "real" | "float" => Some(AttrType::Real),
            "instant" | "time" => Some(AttrType::Instant),
            _ => None,
        }
    }
}

/// Scalar attribute value.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Str(String),
    Int(i64),
    Real(f64),
    Time(Timestamp),
}

impl AttrValue {
    pub fn attr_type(&self) -> AttrType {
        match self {
            AttrValue::Str(_) => AttrType::String,
            AttrValue::Int(_) => AttrType::Integer,
            AttrValue::Real(_) => AttrType::Real,
            AttrValue::Time(_) => AttrType::Instant,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Int(i) => Some(*i as f64),
            AttrValue::Real(r) => Some(*r),
            AttrValue::Time(t) => Some(*t as f64),
            AttrValue::Str(_) => None,
        }
    }

    /// Parse a textual value as the given type.
    pub fn parse_as(s: &str, ty: AttrType) -> Option<AttrValue> {
        match ty {
            AttrType::String => Some(AttrValue::Str(s.to_string())),
            AttrType::Integer => s.trim().parse().ok().map(AttrValue::Int),
            AttrType::Real => s.trim().parse().ok().map(AttrValue::Real),
            AttrType::Instant => crate::time::parse_timestamp(s, None).map(AttrValue::Time),
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Str(s) => f.write_str(s),
            AttrValue::Int(i) => write!(f, "{i}"),
            AttrValue::Real(r) => write!(f, "{r:?}"),
            AttrValue::Time(t) => f.write_str(&format_timestamp(*t)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub event_id: String,
    pub activity: String,
    pub timestamp: Timestamp,
    pub lifecycle: Lifecycle,
    pub resource: Option<String>,
    pub case_id: Option<String>,
    pub attrs: BTreeMap<String, AttrValue>,
}

impl Event {
    pub fn new(event_id: impl Into<String>, activity: impl Into<String>, timestamp: Timestamp) -> Self {
        Event {
            event_id: event_id.into(),
            activity: activity.into(),
            timestamp,
            lifecycle: Lifecycle::Complete,
            resource: None,
            case_id: None,
            attrs: BTreeMap::new(),
        }
    }

    pub fn with_case(mut self, case: impl Into<String>) -> Self {
        self.case_id = Some(case.into());
        self
    }

    pub fn with_lifecycle(mut self, lifecycle: Lifecycle) -> Self {
        self.lifecycle = lifecycle;
        self
    }

    pub fn with_resource(mut self, resource: impl Into<String>) -> Self {
        self.resource = Some(resource.into());
        self
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: AttrValue) -> Self {
        self.attrs.insert(key.into(), value);
        self
    }

    /// Deterministic total order within a trace: timestamp, then start before
    /// complete, then event id.
    pub fn order_key(&self) -> (Timestamp, Lifecycle, &str) {
        (self.timestamp, self.lifecycle, self.event_id.as_str())
    }
}

/// Built-in event fields addressable by name in predicates and cubes.
pub const BUILTIN_FIELDS: &[&str] = &["activity", "timestamp", "lifecycle", "resource", "case", "event_id"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub schema: BTreeMap<String, AttrType>,
    pub events: Vec<Event>,
}

impl EventLog {
    /// Build a log, deriving the schema from the events' attributes.
    pub fn from_events(events: Vec<Event>) -> Result<Self> {
        let mut schema = BTreeMap::new();
        for e in &events {
            for (k, v) in &e.attrs {
                let ty = v.attr_type();
                match schema.insert(k.clone(), ty) {
                    Some(prev) if prev != ty => {
                        return Err(Error::Invariant(format!(
                            "attribute `{k}` has mixed types {} and {}",
                            prev.as_str(),
                            ty.as_str()
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(EventLog { schema, events })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn has_field(&self, name: &str) -> bool {
        BUILTIN_FIELDS.contains(&name) || self.schema.contains_key(name)
    }

    /// Group events into traces by `case_attr` (`case` selects the event's case id).
    pub fn build_traces(&self, case_attr: &str) -> Result<TraceLog> {
        build_traces(self, case_attr)
    }

    /// Keep events satisfying `predicate`, preserving order.
    pub fn filter(&self, predicate: &Predicate) -> Result<EventLog> {
        filter_events(self, predicate)
    }
}

/// Value of a built-in field or attribute of an event, as used by grouping.
pub fn field_value(event: &Event, name: &str) -> Option<AttrValue> {
    match name {
        "activity" => Some(AttrValue::Str(event.activity.clone())),
        "timestamp" => Some(AttrValue::Time(event.timestamp)),
        "lifecycle" => Some(AttrValue::Str(event.lifecycle.as_str().to_string())),
        "resource" => event.resource.clone().map(AttrValue::Str),
        "case" | "case_id" => event.case_id.clone().map(AttrValue::Str),
        "event_id" => Some(AttrValue::Str(event.event_id.clone())),
        other => event.attrs.get(other).cloned(),
    }
}

/// Per-case ordered event sequences.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceLog {
    pub traces: BTreeMap<String, Vec<Event>>,
}

impl TraceLog {
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn event_count(&self) -> usize {
        self.traces.values().map(Vec::len).sum()
    }

    /// Build from already grouped traces, sorting each by the canonical order.
    pub fn from_traces(traces: BTreeMap<String, Vec<Event>>) -> Self {
        let mut traces = traces;
        for events in traces.values_mut() {
            events.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        }
        TraceLog { traces }
    }

    /// Activity sequence per case using complete events only. Traces without
    /// any lifecycle information are all-complete by construction.
    pub fn activity_sequences(&self) -> Vec<(String, Vec<String>)> {
        self.traces
            .iter()
            .map(|(case, events)| {
                let seq = events
                    .iter()
                    .filter(|e| e.lifecycle == Lifecycle::Complete)
                    .map(|e| e.activity.clone())
                    .collect();
                (case.clone(), seq)
            })
            .collect()
    }

    /// Flatten back into an event log (trace order, cases sorted by id).
    pub fn to_event_log(&self) -> Result<EventLog> {
        EventLog::from_events(self.traces.values().flatten().cloned().collect())
    }
}

pub fn build_traces(log: &EventLog, case_attr: &str) -> Result<TraceLog> {
    let mut traces: BTreeMap<String, Vec<Event>> = BTreeMap::new();
    let mut missing = Vec::new();
    for e in &log.events {
        match field_value(e, case_attr) {
            Some(v) => {
                let case = v.to_string();
                let mut ev = e.clone();
                ev.case_id = Some(case.clone());
                traces.entry(case).or_default().push(ev);
            }
            None => missing.push(e.event_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCase {
            attr: case_attr.to_string(),
            event_ids: missing,
        });
    }
    Ok(TraceLog::from_traces(traces))
}

pub fn filter_events(log: &EventLog, predicate: &Predicate) -> Result<EventLog> {
    predicate.check_schema(log)?;
    Ok(EventLog {
        schema: log.schema.clone(),
        events: log.events.iter().filter(|e| predicate.eval(e)).cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(id: &str, case: &str, act: &str, t: i64) -> Event {
        Event::new(id, act, t).with_case(case)
    }

    #[test]
    fn groups_by_case() {
        let log = EventLog::from_events(vec![
            ev("1", "c1", "A", 1),
            ev("2", "c2", "A", 2),
            ev("3", "c1", "B", 3),
            ev("4", "c2", "B", 4),
            ev("5", "c1", "C", 5),
            ev("6", "c2", "C", 6),
        ])
        .unwrap();
        let tl = log.build_traces("case").unwrap();
        assert_eq!(tl.len(), 2);
        assert_eq!(tl.traces["c1"].len(), 3);
        assert_eq!(tl.traces["c2"].len(), 3);
    }

    #[test]
    fn ties_break_by_lifecycle_then_id() {
        let log = EventLog::from_events(vec![
            ev("b", "c1", "X", 10),
            ev("a", "c1", "Y", 10),
            ev("c", "c1", "Z", 10).with_lifecycle(Lifecycle::Start),
        ])
        .unwrap();
        let tl = log.build_traces("case").unwrap();
        let ids: Vec<_> = tl.traces["c1"].iter().map(|e| e.event_id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
    }

    #[test]
    fn missing_case_lists_events() {
        let log = EventLog::from_events(vec![ev("1", "c1", "A", 1), Event::new("2", "A", 2)]).unwrap();
        match log.build_traces("case") {
            Err(Error::MissingCase { event_ids, .. }) => assert_eq!(event_ids, vec!["2".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn groups_by_attribute() {
        let log = EventLog::from_events(vec![
            ev("1", "c1", "A", 1).with_attr("order", AttrValue::Int(7)),
            ev("2", "c2", "A", 2).with_attr("order", AttrValue::Int(7)),
        ])
        .unwrap();
        let tl = log.build_traces("order").unwrap();
        assert_eq!(tl.traces["7"].len(), 2);
        assert!(tl.traces["7"].iter().all(|e| e.case_id.as_deref() == Some("7")));
    }

    #[test]
    fn mixed_attribute_types_rejected() {
        let r = EventLog::from_events(vec![
            ev("1", "c", "A", 1).with_attr("x", AttrValue::Int(1)),
            ev("2", "c", "A", 1).with_attr("x", AttrValue::Str("a".into())),
        ]);
        assert!(r.is_err());
    }
}
