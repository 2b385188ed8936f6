//! Object-centric event logs: flattening, convergence/divergence metrics and
//! the directly-follows multigraph.
//!
//! Interchange format:
//! ```text
//! { "objects": { "o1": { "type": "order", "attrs": {} }, ... },
//!   "events": [ { "id": "oe0000001", "activity": "place planned order",
//!                 "time": "2017-01-02T08:00:00.000Z",
//!                 "omap": { "order": ["o1"], "product": ["car-00001"] },
//!                 "vmap": { "color": "white" } } ] }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::discovery::dfg::{dot_id, node_key};
use crate::discovery::{discover_dfg, ArcStats, Dfg, Node};
use crate::error::{Error, Result};
use crate::event_model::{AttrValue, Event, TraceLog};
use crate::time::{format_timestamp, parse_timestamp, Timestamp};

#[derive(Debug, Clone, PartialEq)]
pub struct OcObject {
    pub object_type: String,
    pub attrs: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcEvent {
    pub event_id: String,
    pub activity: String,
    pub timestamp: Timestamp,
    /// Object type to referenced object ids.
    pub omap: BTreeMap<String, BTreeSet<String>>,
    pub attrs: BTreeMap<String, AttrValue>,
}

impl OcEvent {
    pub fn objects_of(&self, object_type: &str) -> impl Iterator<Item = &String> {
        self.omap.get(object_type).into_iter().flatten()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjectCentricLog {
    pub objects: BTreeMap<String, OcObject>,
    pub events: Vec<OcEvent>,
}

impl ObjectCentricLog {
    pub fn types(&self) -> BTreeSet<String> {
        self.objects.values().map(|o| o.object_type.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Referential integrity, non-empty object maps, and global time order.
    pub fn validate(&self) -> Result<()> {
        let mut prev = Timestamp::MIN;
        let mut ids = BTreeSet::new();
        for e in &self.events {
            if !ids.insert(&e.event_id) {
                return Err(Error::Invariant(format!("duplicate event id `{}`", e.event_id)));
            }
            if e.timestamp < prev {
                return Err(Error::Invariant(format!("event `{}` out of time order", e.event_id)));
            }
            prev = e.timestamp;
            if e.omap.values().all(BTreeSet::is_empty) {
                return Err(Error::Invariant(format!("event `{}` references no object", e.event_id)));
            }
            for (ty, objs) in &e.omap {
                for o in objs {
                    match self.objects.get(o) {
                        Some(obj) if &obj.object_type == ty => {}
                        Some(obj) => {
                            return Err(Error::Invariant(format!(
                                "object `{o}` is a {} but referenced as {ty}",
                                obj.object_type
                            )))
                        }
                        None => return Err(Error::Invariant(format!("unknown object `{o}`"))),
                    }
                }
            }
        }
        Ok(())
    }

    fn check_type(&self, object_type: &str) -> Result<()> {
        if self.objects.values().any(|o| o.object_type == object_type) {
            Ok(())
        } else {
            Err(Error::UnknownObjectType(object_type.to_string()))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonObject {
    #[serde(rename = "type")]
    object_type: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attrs: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct JsonOcEvent {
    id: String,
    activity: String,
    time: String,
    omap: BTreeMap<String, BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    vmap: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct JsonOcel {
    objects: BTreeMap<String, JsonObject>,
    events: Vec<JsonOcEvent>,
}

fn value_to_json(v: &AttrValue) -> Value {
    match v {
        AttrValue::Str(s) => Value::String(s.clone()),
        AttrValue::Int(i) => Value::from(*i),
        AttrValue::Real(r) => serde_json::Number::from_f64(*r).map(Value::Number).unwrap_or(Value::Null),
        AttrValue::Time(t) => Value::String(format_timestamp(*t)),
    }
}

fn json_to_value(v: &Value) -> Result<AttrValue> {
    match v {
        Value::String(s) => Ok(AttrValue::Str(s.clone())),
        Value::Number(n) => Ok(n.as_i64().map(AttrValue::Int).unwrap_or(AttrValue::Real(n.as_f64().unwrap_or(f64::NAN)))),
        Value::Bool(b) => Ok(AttrValue::Str(b.to_string())),
        other => Err(Error::Invariant(format!("unsupported attribute value {other}"))),
    }
}

fn attrs_from_json(m: &BTreeMap<String, Value>) -> Result<BTreeMap<String, AttrValue>> {
    m.iter().map(|(k, v)| Ok((k.clone(), json_to_value(v)?))).collect()
}

pub fn parse_ocel<R: Read>(input: R) -> Result<ObjectCentricLog> {
    let raw: JsonOcel = serde_json::from_reader(input)?;
    let objects = raw
        .objects
        .iter()
        .map(|(id, o)| {
            Ok((
                id.clone(),
                OcObject {
                    object_type: o.object_type.clone(),
                    attrs: attrs_from_json(&o.attrs)?,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let events = raw
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            Ok(OcEvent {
                event_id: e.id.clone(),
                activity: e.activity.clone(),
                timestamp: parse_timestamp(&e.time, None).ok_or_else(|| Error::Row {
                    line: i as u64 + 1,
                    message: format!("malformed timestamp `{}`", e.time),
                })?,
                omap: e.omap.clone(),
                attrs: attrs_from_json(&e.vmap)?,
            })
        })
        .collect::<Result<_>>()?;
    let log = ObjectCentricLog { objects, events };
    log.validate()?;
    Ok(log)
}

pub fn write_ocel<W: Write>(log: &ObjectCentricLog, out: W) -> Result<()> {
    let doc = JsonOcel {
        objects: log
            .objects
            .iter()
            .map(|(id, o)| {
                (
                    id.clone(),
                    JsonObject {
                        object_type: o.object_type.clone(),
                        attrs: o.attrs.iter().map(|(k, v)| (k.clone(), value_to_json(v))).collect(),
                    },
                )
            })
            .collect(),
        events: log
            .events
            .iter()
            .map(|e| JsonOcEvent {
                id: e.event_id.clone(),
                activity: e.activity.clone(),
                time: format_timestamp(e.timestamp),
                omap: e.omap.clone(),
                vmap: e.attrs.iter().map(|(k, v)| (k.clone(), value_to_json(v))).collect(),
            })
            .collect(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

/// Result of flattening onto one object type.
#[derive(Debug, Clone, PartialEq)]
pub struct Flattened {
    pub log: TraceLog,
    /// Events without a reference to the chosen type.
    pub dropped: usize,
}

/// Replicate every event once per referenced object of `object_type`; the
/// object id becomes the case id.
pub fn flatten(log: &ObjectCentricLog, object_type: &str) -> Result<Flattened> {
    log.check_type(object_type)?;
    let mut traces: BTreeMap<String, Vec<Event>> = BTreeMap::new();
    let mut dropped = 0;
    for e in &log.events {
        let mut any = false;
        for obj in e.objects_of(object_type) {
            any = true;
            let mut ev = Event::new(format!("{}@{obj}", e.event_id), e.activity.clone(), e.timestamp).with_case(obj);
            ev.attrs = e.attrs.clone();
            traces.entry(obj.clone()).or_default().push(ev);
        }
        dropped += usize::from(!any);
    }
    Ok(Flattened {
        log: TraceLog::from_traces(traces),
        dropped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatteningMetrics {
    pub object_type: String,
    /// Events referencing at least one object of the type.
    pub original_events: usize,
    pub flattened_events: usize,
    pub replication_factor: f64,
    pub dropped_events: usize,
    /// Replication factor per activity.
    pub activity_replication: BTreeMap<String, f64>,
    /// Directly-following same-activity pairs in a flattened trace whose
    /// objects of the other types are disjoint.
    pub divergence: usize,
}

pub fn flattening_metrics(log: &ObjectCentricLog, object_type: &str) -> Result<FlatteningMetrics> {
    log.check_type(object_type)?;
    let mut original = 0usize;
    let mut flattened = 0usize;
    let mut per_activity: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut traces: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in log.events.iter().enumerate() {
        let refs: Vec<&String> = e.objects_of(object_type).collect();
        if refs.is_empty() {
            continue;
        }
        original += 1;
        flattened += refs.len();
        let c = per_activity.entry(e.activity.clone()).or_default();
        c.0 += 1;
        c.1 += refs.len();
        for r in refs {
            traces.entry(r).or_default().push(i);
        }
    }
    fn others<'e>(e: &'e OcEvent, object_type: &str) -> BTreeSet<&'e String> {
        e.omap
            .iter()
            .filter(|(t, _)| t.as_str() != object_type)
            .flat_map(|(_, objs)| objs.iter())
            .collect()
    }
    let mut divergence = 0;
    for idx in traces.values() {
        // the log is time ordered, so event indices are the flattened order
        for w in idx.windows(2) {
            let (a, b) = (&log.events[w[0]], &log.events[w[1]]);
            if a.activity != b.activity {
                continue;
            }
            let (oa, ob) = (others(a, object_type), others(b, object_type));
            if !oa.is_empty() && !ob.is_empty() && oa.is_disjoint(&ob) {
                divergence += 1;
            }
        }
    }
    let ratio = |f: usize, o: usize| if o == 0 { 0.0 } else { f as f64 / o as f64 };
    Ok(FlatteningMetrics {
        object_type: object_type.to_string(),
        original_events: original,
        flattened_events: flattened,
        replication_factor: ratio(flattened, original),
        dropped_events: log.events.len() - original,
        activity_replication: per_activity.into_iter().map(|(a, (o, f))| (a, ratio(f, o))).collect(),
        divergence,
    })
}

/// Per-type DFGs merged into one graph with type-tagged arcs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DfMultigraph {
    pub arcs: BTreeMap<(String, Node, Node), ArcStats>,
}

impl DfMultigraph {
    pub fn types(&self) -> BTreeSet<String> {
        self.arcs.keys().map(|(t, _, _)| t.clone()).collect()
    }

    pub fn activities(&self) -> BTreeSet<String> {
        self.arcs
            .keys()
            .flat_map(|(_, a, b)| [a, b])
            .filter_map(|n| match n {
                Node::Activity(a) => Some(a.clone()),
                _ => None,
            })
            .collect()
    }

    /// Arcs of one object type as a DFG.
    pub fn projection(&self, object_type: &str) -> Dfg {
        Dfg {
            arcs: self
                .arcs
                .iter()
                .filter(|((t, _, _), _)| t == object_type)
                .map(|((_, a, b), s)| ((a.clone(), b.clone()), *s))
                .collect(),
        }
    }

    /// DOT with one colour per object type and per-type start/end nodes.
    pub fn to_dot(&self) -> String {
        const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
        let types: Vec<String> = self.types().into_iter().collect();
        let color = |t: &str| PALETTE[types.iter().position(|x| x == t).unwrap_or(0) % PALETTE.len()];
        let key = |t: &str, n: &Node| match n {
            Node::Activity(_) => node_key(n),
            _ => format!("{}:{t}", node_key(n)),
        };
        let mut s = String::from("digraph multigraph {\n  rankdir=LR;\n");
        for a in self.activities() {
            let _ = writeln!(s, "  {} [shape=box];", dot_id(&a));
        }
        for t in &types {
            for n in [Node::Start, Node::End] {
                let _ = writeln!(
                    s,
                    "  {} [label={}, shape=circle, color=\"{}\"];",
                    dot_id(&key(t, &n)),
                    dot_id(&format!("{n} {t}")),
                    color(t)
                );
            }
        }
        for ((t, a, b), st) in &self.arcs {
            let _ = writeln!(
                s,
                "  {} -> {} [color=\"{}\", label=\"{}: {} / {:.1}s\"];",
                dot_id(&key(t, a)),
                dot_id(&key(t, b)),
                color(t),
                t,
                st.frequency,
                st.mean_duration()
            );
        }
        s.push_str("}\n");
        s
    }
}

pub fn discover_multigraph(log: &ObjectCentricLog) -> Result<DfMultigraph> {
    let mut g = DfMultigraph::default();
    for t in log.types() {
        let dfg = discover_dfg(&flatten(log, &t)?.log);
        for ((a, b), s) in dfg.arcs {
            g.arcs.insert((t.clone(), a, b), s);
        }
    }
    Ok(g)
}

/// Process cubes are defined over single-case-notion logs only.
pub fn build_object_centric_cube(_log: &ObjectCentricLog) -> Result<()> {
    Err(Error::Unsupported(
        "process cubes over object-centric logs; flatten to one object type first".into(),
    ))
}
