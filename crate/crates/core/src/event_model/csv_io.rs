//! Flat CSV interchange.
//!
//! A header row is required. Attribute columns may carry a type suffix
//! (`color:string`, `weight:real`, ...); untyped attribute columns are
//! inferred as integer, then real, then string.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{AttrType, AttrValue, Event, EventLog, Lifecycle};
use crate::error::{Error, Result};
use crate::time::{format_timestamp, parse_timestamp};

/// Assignment of CSV columns to event roles.
#[derive(Debug, Clone)]
pub struct ColumnMapping {
    pub case: String,
    pub activity: String,
    pub timestamp: String,
    pub lifecycle: String,
    pub resource: String,
    pub event_id: String,
    /// chrono format string; `None` accepts ISO-8601.
    pub timestamp_format: Option<String>,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            case: "case".into(),
            activity: "activity".into(),
            timestamp: "timestamp".into(),
            lifecycle: "lifecycle".into(),
            resource: "resource".into(),
            event_id: "event_id".into(),
            timestamp_format: None,
        }
    }
}

struct AttrColumn {
    index: usize,
    name: String,
    declared: Option<AttrType>,
}

/// Parse a CSV event log. Rows keep file order.
pub fn parse_csv_log<R: Read>(input: R, mapping: &ColumnMapping) -> Result<EventLog> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.to_string()));
    let case_col = required(&mapping.case)?;
    let act_col = required(&mapping.activity)?;
    let ts_col = required(&mapping.timestamp)?;
    let life_col = find(&mapping.lifecycle);
    let res_col = find(&mapping.resource);
    let id_col = find(&mapping.event_id);
    let mapped = [Some(case_col), Some(act_col), Some(ts_col), life_col, res_col, id_col];

    let attr_cols: Vec<AttrColumn> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !mapped.contains(&Some(*i)))
        .map(|(index, h)| match h.rsplit_once(':') {
            Some((name, ty)) if AttrType::parse(ty).is_some() => AttrColumn {
                index,
                name: name.to_string(),
                declared: AttrType::parse(ty),
            },
            _ => AttrColumn {
                index,
                name: h.to_string(),
                declared: None,
            },
        })
        .collect();

    let mut rows = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(row_no as u64 + 2);
        let field = |i: usize| record.get(i).unwrap_or("");
        let ts = parse_timestamp(field(ts_col), mapping.timestamp_format.as_deref()).ok_or_else(|| Error::Row {
            line,
            message: format!("malformed timestamp `{}`", field(ts_col)),
        })?;
        let lifecycle = match life_col {
            Some(i) => Lifecycle::parse(field(i)).ok_or_else(|| Error::Row {
                line,
                message: format!("unknown lifecycle `{}`", field(i)),
            })?,
            None => Lifecycle::Complete,
        };
        let event_id = match id_col {
            Some(i) => field(i).to_string(),
            None => format!("e{}", row_no + 1),
        };
        let resource = res_col.map(field).filter(|s| !s.is_empty()).map(str::to_string);
        let event = Event {
            event_id,
            activity: field(act_col).to_string(),
            timestamp: ts,
            lifecycle,
            resource,
            case_id: Some(field(case_col).to_string()),
            attrs: BTreeMap::new(),
        };
        let raw: Vec<String> = attr_cols.iter().map(|c| field(c.index).to_string()).collect();
        rows.push((line, event, raw));
    }

    // resolve attribute column types
    let mut types = Vec::with_capacity(attr_cols.len());
    for (k, col) in attr_cols.iter().enumerate() {
        let ty = match col.declared {
            Some(t) => t,
            None => {
                let values = rows.iter().map(|r| r.2[k].as_str()).filter(|s| !s.is_empty());
                infer_type(values)
            }
        };
        types.push(ty);
    }

    let mut schema = BTreeMap::new();
    for (col, ty) in attr_cols.iter().zip(&types) {
        schema.insert(col.name.clone(), *ty);
    }
    let mut seen = std::collections::HashSet::new();
    let mut events = Vec::with_capacity(rows.len());
    for (line, mut event, raw) in rows {
        for ((col, ty), value) in attr_cols.iter().zip(&types).zip(raw) {
            if value.is_empty() {
                continue;
            }
            let v = AttrValue::parse_as(&value, *ty).ok_or_else(|| Error::Row {
                line,
                message: format!("value `{value}` of `{}` is not {}", col.name, ty.as_str()),
            })?;
            event.attrs.insert(col.name.clone(), v);
        }
        if !seen.insert(event.event_id.clone()) {
            return Err(Error::Row {
                line,
                message: format!("duplicate event id `{}`", event.event_id),
            });
        }
        events.push(event);
    }
    Ok(EventLog { schema, events })
}

fn infer_type<'a>(values: impl Iterator<Item = &'a str> + Clone) -> AttrType {
    let mut any = false;
    let mut all_int = true;
    let mut all_real = true;
    for v in values {
        any = true;
        if v.trim().parse::<i64>().is_err() {
            all_int = false;
        }
        if v.trim().parse::<f64>().is_err() {
            all_real = false;
            break;
        }
    }
    match (any, all_int, all_real) {
        (true, true, _) => AttrType::Integer,
        (true, false, true) => AttrType::Real,
        _ => AttrType::String,
    }
}

/// Write the canonical CSV form: `event_id,case,activity,timestamp,lifecycle,resource`
/// followed by typed attribute columns in schema order.
pub fn write_csv_log<W: Write>(log: &EventLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "event_id".to_string(),
        "case".to_string(),
        "activity".to_string(),
        "timestamp".to_string(),
        "lifecycle".to_string(),
        "resource".to_string(),
    ];
    header.extend(log.schema.iter().map(|(k, t)| format!("{k}:{}", t.as_str())));
    w.write_record(&header)?;
    for e in &log.events {
        let mut rec = vec![
            e.event_id.clone(),
            e.case_id.clone().unwrap_or_default(),
            e.activity.clone(),
            format_timestamp(e.timestamp),
            e.lifecycle.as_str().to_string(),
            e.resource.clone().unwrap_or_default(),
        ];
        rec.extend(log.schema.keys().map(|k| e.attrs.get(k).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows() {
        let data = "case,activity,time\nc1,A,2020-01-01T08:00:00Z\nc1,B,2020-01-01T09:00:00Z\nc2,A,2020-01-02\n";
        let mapping = ColumnMapping {
            timestamp: "time".into(),
            ..Default::default()
        };
        let log = parse_csv_log(data.as_bytes(), &mapping).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(log.events[1].activity, "B");
        assert_eq!(log.events[2].case_id.as_deref(), Some("c2"));
        assert!(log.schema.is_empty());
    }

    #[test]
    fn header_only_is_empty() {
        let log = parse_csv_log("case,activity,timestamp\n".as_bytes(), &ColumnMapping::default()).unwrap();
        assert!(log.is_empty());
    }

    #[test]
    fn bad_timestamp_names_line() {
        let data = "case,activity,timestamp\nc1,A,yesterday\n";
        match parse_csv_log(data.as_bytes(), &ColumnMapping::default()) {
            Err(Error::Row { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_fatal() {
        let data = "case,timestamp\nc1,2020-01-01\n";
        assert!(matches!(
            parse_csv_log(data.as_bytes(), &ColumnMapping::default()),
            Err(Error::MissingColumn(c)) if c == "activity"
        ));
    }

    #[test]
    fn unmapped_columns_become_attrs() {
        let data = "case,activity,timestamp,color,weight,n\nc1,A,2020-01-01,white,1.5,3\n\"c,2\",B,2020-01-01,\"blue, dark\",2,4\n";
        let log = parse_csv_log(data.as_bytes(), &ColumnMapping::default()).unwrap();
        assert_eq!(log.schema["color"], AttrType::String);
        assert_eq!(log.schema["weight"], AttrType::Real);
        assert_eq!(log.schema["n"], AttrType::Integer);
        assert_eq!(log.events[1].case_id.as_deref(), Some("c,2"));
        assert_eq!(log.events[1].attrs["color"], AttrValue::Str("blue, dark".into()));
        assert_eq!(log.events[1].attrs["weight"], AttrValue::Real(2.0));
    }

    #[test]
    fn custom_timestamp_format() {
        let data = "case,activity,timestamp\nc1,A,03/01/2020 10:30\n";
        let mapping = ColumnMapping {
            timestamp_format: Some("%d/%m/%Y %H:%M".into()),
            ..Default::default()
        };
        let log = parse_csv_log(data.as_bytes(), &mapping).unwrap();
        assert_eq!(crate::time::format_timestamp(log.events[0].timestamp), "2020-01-03T10:30:00.000Z");
    }
}
