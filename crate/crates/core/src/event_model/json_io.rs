//! JSON interchange for logs with typed attributes.
//!
//! ```text
//! { "schema": { "color": "string", ... },
//!   "events": [ { "id": "e1", "activity": "GA0", "timestamp": "2017-01-02T08:00:00.000Z",
//!                 "lifecycle": "start", "resource": "op1", "case": "car-0001",
//!                 "attrs": { "color": "white" } } ] }
//! ```
//! Instant attributes are ISO-8601 strings; the schema decides how values are read.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AttrType, AttrValue, Event, EventLog, Lifecycle};
use crate::error::{Error, Result};
use crate::time::{format_timestamp, parse_timestamp};

#[derive(Serialize, Deserialize)]
struct JsonLog {
    schema: BTreeMap<String, AttrType>,
    events: Vec<JsonEvent>,
}

#[derive(Serialize, Deserialize)]
struct JsonEvent {
    id: String,
    activity: String,
    timestamp: String,
    lifecycle: Lifecycle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    resource: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    case: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attrs: BTreeMap<String, Value>,
}

fn to_json(v: &AttrValue) -> Value {
    match v {
        AttrValue::Str(s) => Value::String(s.clone()),
        AttrValue::Int(i) => Value::from(*i),
        AttrValue::Real(r) => serde_json::Number::from_f64(*r).map(Value::Number).unwrap_or(Value::Null),
        AttrValue::Time(t) => Value::String(format_timestamp(*t)),
    }
}

fn from_json(v: &Value, ty: AttrType) -> Option<AttrValue> {
    match (ty, v) {
        (AttrType::String, Value::String(s)) => Some(AttrValue::Str(s.clone())),
        (AttrType::Integer, Value::Number(n)) => n.as_i64().map(AttrValue::Int),
        (AttrType::Real, Value::Number(n)) => n.as_f64().map(AttrValue::Real),
        (AttrType::Instant, Value::String(s)) => parse_timestamp(s, None).map(AttrValue::Time),
        _ => None,
    }
}

pub fn parse_json_log<R: Read>(input: R) -> Result<EventLog> {
    let raw: JsonLog = serde_json::from_reader(input)?;
    let mut events = Vec::with_capacity(raw.events.len());
    let mut seen = std::collections::HashSet::new();
    for (i, je) in raw.events.into_iter().enumerate() {
        let row = |message: String| Error::Row { line: i as u64 + 1, message };
        let timestamp =
            parse_timestamp(&je.timestamp, None).ok_or_else(|| row(format!("malformed timestamp `{}`", je.timestamp)))?;
        let mut attrs = BTreeMap::new();
        for (k, v) in &je.attrs {
            let ty = *raw.schema.get(k).ok_or_else(|| Error::UnknownAttribute(k.clone()))?;
            let val = from_json(v, ty).ok_or_else(|| row(format!("attribute `{k}` is not {}", ty.as_str())))?;
            attrs.insert(k.clone(), val);
        }
        if !seen.insert(je.id.clone()) {
            return Err(row(format!("duplicate event id `{}`", je.id)));
        }
        events.push(Event {
            event_id: je.id,
            activity: je.activity,
            timestamp,
            lifecycle: je.lifecycle,
            resource: je.resource,
            case_id: je.case,
            attrs,
        });
    }
    Ok(EventLog {
        schema: raw.schema,
        events,
    })
}

pub fn write_json_log<W: Write>(log: &EventLog, out: W) -> Result<()> {
    let doc = JsonLog {
        schema: log.schema.clone(),
        events: log
            .events
            .iter()
            .map(|e| JsonEvent {
                id: e.event_id.clone(),
                activity: e.activity.clone(),
                timestamp: format_timestamp(e.timestamp),
                lifecycle: e.lifecycle,
                resource: e.resource.clone(),
                case: e.case_id.clone(),
                attrs: e.attrs.iter().map(|(k, v)| (k.clone(), to_json(v))).collect(),
            })
            .collect(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}
