use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::event_model::TraceLog;
use crate::time::{format_timestamp, Timestamp};

/// Row ordering of a dotted chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DottedSort {
    /// Ascending first-event time.
    FirstEvent,
    /// Descending case duration.
    Duration,
}

impl std::str::FromStr for DottedSort {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-event" | "first" => Ok(DottedSort::FirstEvent),
            "duration" => Ok(DottedSort::Duration),
            _ => Err(crate::Error::Parameter(format!("unknown dotted-chart sort `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DottedPoint {
    pub row: usize,
    pub timestamp: Timestamp,
    pub activity: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DottedChart {
    /// Case ids, row 0 first.
    pub rows: Vec<String>,
    pub points: Vec<DottedPoint>,
}

impl DottedChart {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "case", "timestamp", "activity"])?;
        for p in &self.points {
            w.write_record([
                p.row.to_string(),
                self.rows[p.row].clone(),
                format_timestamp(p.timestamp),
                p.activity.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One point per event; ties in the sort key fall back to case id.
pub fn dotted_chart(log: &TraceLog, sort: DottedSort) -> DottedChart {
    let mut cases: Vec<(&String, Timestamp, Timestamp)> = log
        .traces
        .iter()
        .filter_map(|(c, evs)| {
            let first = evs.iter().map(|e| e.timestamp).min()?;
            let last = evs.iter().map(|e| e.timestamp).max()?;
            Some((c, first, last - first))
        })
        .collect();
    match sort {
        DottedSort::FirstEvent => cases.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(b.0))),
        DottedSort::Duration => cases.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(b.0))),
    }
    let mut points = Vec::with_capacity(log.event_count());
    for (row, (case, _, _)) in cases.iter().enumerate() {
        for e in &log.traces[*case] {
            points.push(DottedPoint {
                row,
                timestamp: e.timestamp,
                activity: e.activity.clone(),
            });
        }
    }
    DottedChart {
        rows: cases.into_iter().map(|(c, _, _)| c.clone()).collect(),
        points,
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::event_model::Event;
    use crate::time::MS_PER_DAY;

    #[test]
    fn duration_sort_puts_longest_first() {
        let mut m = BTreeMap::new();
        m.insert("short".to_string(), vec![Event::new("1", "A", 0), Event::new("2", "B", MS_PER_DAY)]);
        m.insert("long".to_string(), vec![Event::new("3", "A", 0), Event::new("4", "B", 5 * MS_PER_DAY)]);
        let chart = dotted_chart(&TraceLog::from_traces(m), DottedSort::Duration);
        assert_eq!(chart.rows, vec!["long", "short"]);
        assert_eq!(chart.points.len(), 4);
    }
}
