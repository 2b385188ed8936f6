//! Service, waiting and sojourn times per station.
//!
//! Service is the worked time between a visit's start and complete. Waiting
//! runs from the moment the upstream station released the case to the
//! visit's start, also in worked time. All durations are in seconds.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_model::{Event, Lifecycle, TraceLog};
use crate::time::{Calendar, Timestamp};

/// How the upstream reference of a visit is found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Upstream {
    /// The latest complete event of the case at or before the visit's start.
    PreviousComplete,
    /// Station to upstream station (`None`: measure from the case's first
    /// event). The reference is the latest event of the upstream visit at or
    /// before the start, so a station triggered by an upstream start waits
    /// from that start. Unvisited upstream stations fall back to
    /// `PreviousComplete`.
    Explicit(BTreeMap<String, Option<String>>),
}

/// One paired start/complete of a station in a case.
#[derive(Debug, Clone, PartialEq)]
pub struct Visit {
    pub case_id: String,
    pub station: String,
    pub start: Timestamp,
    pub complete: Timestamp,
    pub resource: Option<String>,
    pub waiting: f64,
    pub service: f64,
}

impl Visit {
    pub fn sojourn(&self) -> f64 {
        self.waiting + self.service
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Summary {
            count: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(&v, 0.5),
            p95: quantile(&v, 0.95),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationStat {
    pub service: Summary,
    pub waiting: Summary,
    pub sojourn: Summary,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StationStats {
    pub stations: BTreeMap<String, StationStat>,
    /// Start or complete events without a partner.
    pub unpaired_events: usize,
}

/// Pair starts and completes per case (a complete closes the latest open
/// start of its activity) and measure every visit.
pub fn visits(log: &TraceLog, calendar: &Calendar, upstream: &Upstream) -> (Vec<Visit>, usize) {
    let mut out = Vec::new();
    let mut unpaired = 0;
    for (case, events) in &log.traces {
        let Some(first) = events.first().map(|e| e.timestamp) else { continue };
        let mut open: BTreeMap<&str, Vec<&Event>> = BTreeMap::new();
        let mut pairs: Vec<(&Event, &Event)> = Vec::new();
        for e in events {
            match e.lifecycle {
                Lifecycle::Start => open.entry(&e.activity).or_default().push(e),
                Lifecycle::Complete => match open.get_mut(e.activity.as_str()).and_then(Vec::pop) {
                    Some(s) => pairs.push((s, e)),
                    None => unpaired += 1,
                },
            }
        }
        unpaired += open.values().map(Vec::len).sum::<usize>();
        let previous_complete = |t: Timestamp, own: &Event| {
            events
                .iter()
                .filter(|e| e.lifecycle == Lifecycle::Complete && e.timestamp <= t && !std::ptr::eq(*e, own))
                .map(|e| e.timestamp)
                .max()
                .unwrap_or(first)
        };
        for (s, c) in pairs {
            let reference = match upstream {
                Upstream::PreviousComplete => previous_complete(s.timestamp, c),
                Upstream::Explicit(map) => match map.get(&s.activity) {
                    Some(None) => first,
                    Some(Some(up)) => events
                        .iter()
                        .filter(|e| &e.activity == up && e.timestamp <= s.timestamp)
                        .map(|e| e.timestamp)
                        .max()
                        .unwrap_or_else(|| previous_complete(s.timestamp, c)),
                    None => previous_complete(s.timestamp, c),
                },
            };
            out.push(Visit {
                case_id: case.clone(),
                station: s.activity.clone(),
                start: s.timestamp,
                complete: c.timestamp,
                resource: s.resource.clone(),
                waiting: calendar.worked_between(reference, s.timestamp) as f64 / 1000.0,
                service: calendar.worked_between(s.timestamp, c.timestamp) as f64 / 1000.0,
            });
        }
    }
    (out, unpaired)
}

pub fn station_stats(log: &TraceLog, calendar: &Calendar, upstream: &Upstream) -> StationStats {
    let (vs, unpaired) = visits(log, calendar, upstream);
    let mut grouped: BTreeMap<&str, (Vec<f64>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for v in &vs {
        let g = grouped.entry(&v.station).or_default();
        g.0.push(v.service);
        g.1.push(v.waiting);
        g.2.push(v.sojourn());
    }
    StationStats {
        stations: grouped
            .into_iter()
            .map(|(s, (sv, w, so))| {
                (
                    s.to_string(),
                    StationStat {
                        service: Summary::of(&sv),
                        waiting: Summary::of(&w),
                        sojourn: Summary::of(&so),
                    },
                )
            })
            .collect(),
        unpaired_events: unpaired,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Service,
    Waiting,
    Sojourn,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "service" => Ok(Metric::Service),
            "waiting" => Ok(Metric::Waiting),
            "sojourn" => Ok(Metric::Sojourn),
            other => Err(Error::UnknownMetric(other.to_string())),
        }
    }
}

/// Stations by descending mean of `metric`, ties by label.
pub fn bottleneck_ranking(stats: &StationStats, metric: Metric) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = stats
        .stations
        .iter()
        .map(|(s, st)| {
            let m = match metric {
                Metric::Service => st.service.mean,
                Metric::Waiting => st.waiting.mean,
                Metric::Sojourn => st.sojourn.mean,
            };
            (s.clone(), m)
        })
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

/// Colour band (0 = lowest) of each ranked value, cutting at the
/// `bands`-quantiles of the values themselves.
pub fn quantile_bands(ranking: &[(String, f64)], bands: usize) -> BTreeMap<String, usize> {
    let mut sorted: Vec<f64> = ranking.iter().map(|(_, v)| *v).filter(|v| v.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let cuts: Vec<f64> = if sorted.is_empty() {
        Vec::new()
    } else {
        (1..bands).map(|i| quantile(&sorted, i as f64 / bands as f64)).collect()
    };
    ranking
        .iter()
        .map(|(s, v)| (s.clone(), cuts.iter().filter(|&&c| *v > c).count()))
        .collect()
}

/// Sojourn times at `station` in order of completion (ties by case id).
pub fn sojourn_series(log: &TraceLog, station: &str, calendar: &Calendar, upstream: &Upstream) -> Vec<(String, f64)> {
    let (vs, _) = visits(log, calendar, upstream);
    series_of(&vs, station)
}

/// Sojourn series of one station from precomputed visits.
pub fn series_of(visits: &[Visit], station: &str) -> Vec<(String, f64)> {
    let mut at: Vec<&Visit> = visits.iter().filter(|v| v.station == station).collect();
    at.sort_by(|a, b| a.complete.cmp(&b.complete).then_with(|| a.case_id.cmp(&b.case_id)));
    at.into_iter().map(|v| (v.case_id.clone(), v.sojourn())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingSeries {
    pub station: String,
    pub window: usize,
    /// (number of cars seen, mean sojourn seconds of the last `window`).
    pub points: Vec<(usize, f64)>,
}

/// Trailing mean over `window` values; the first point is at ordinal `window`.
pub fn rolling_mean(values: &[f64], window: usize) -> Vec<(usize, f64)> {
    if window == 0 || values.len() < window {
        return Vec::new();
    }
    let mut sum: f64 = values[..window].iter().sum();
    let mut out = vec![(window, sum / window as f64)];
    for i in window..values.len() {
        sum += values[i] - values[i - window];
        out.push((i + 1, sum / window as f64));
    }
    out
}

pub fn rolling_sojourn(
    log: &TraceLog,
    station: &str,
    window: usize,
    calendar: &Calendar,
    upstream: &Upstream,
) -> RollingSeries {
    let values: Vec<f64> = sojourn_series(log, station, calendar, upstream).into_iter().map(|(_, v)| v).collect();
    RollingSeries {
        station: station.to_string(),
        window,
        points: rolling_mean(&values, window),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::parse_timestamp;

    fn ts(s: &str) -> Timestamp {
        parse_timestamp(s, None).unwrap()
    }

    fn visit_log(events: &[(&str, &str, Lifecycle, &str)]) -> TraceLog {
        let mut traces: BTreeMap<String, Vec<Event>> = BTreeMap::new();
        for (i, (case, act, lc, t)) in events.iter().enumerate() {
            traces
                .entry(case.to_string())
                .or_default()
                .push(Event::new(format!("e{i:03}"), *act, ts(t)).with_case(*case).with_lifecycle(*lc));
        }
        TraceLog::from_traces(traces)
    }

    #[test]
    fn single_visit() {
        let log = visit_log(&[
            ("c", "GA0", Lifecycle::Start, "2017-01-02T09:00:00Z"),
            ("c", "GA0", Lifecycle::Complete, "2017-01-02T09:30:00Z"),
        ]);
        let s = station_stats(&log, &Calendar::default(), &Upstream::PreviousComplete);
        assert_eq!(s.stations["GA0"].service.mean, 1800.0);
        assert_eq!(s.stations["GA0"].waiting.mean, 0.0);
    }

    #[test]
    fn overnight_service_excludes_pause() {
        let log = visit_log(&[
            ("c", "GA0", Lifecycle::Start, "2017-01-02T16:50:00Z"),
            ("c", "GA0", Lifecycle::Complete, "2017-01-03T08:10:00Z"),
        ]);
        let s = station_stats(&log, &Calendar::default(), &Upstream::PreviousComplete);
        assert_eq!(s.stations["GA0"].service.mean, 20.0 * 60.0);
    }

    #[test]
    fn unpaired_events_are_counted() {
        let log = visit_log(&[
            ("c", "GA0", Lifecycle::Start, "2017-01-02T09:00:00Z"),
            ("c", "GA1", Lifecycle::Complete, "2017-01-02T09:30:00Z"),
        ]);
        let s = station_stats(&log, &Calendar::default(), &Upstream::PreviousComplete);
        assert_eq!(s.unpaired_events, 2);
        assert!(s.stations.is_empty());
    }

    #[test]
    fn waiting_from_explicit_upstream() {
        let log = visit_log(&[
            ("c", "GA0", Lifecycle::Start, "2017-01-02T09:00:00Z"),
            ("c", "SA1", Lifecycle::Start, "2017-01-02T09:01:00Z"),
            ("c", "SA1", Lifecycle::Complete, "2017-01-02T09:20:00Z"),
            ("c", "GA0", Lifecycle::Complete, "2017-01-02T09:10:00Z"),
            ("c", "GA1", Lifecycle::Start, "2017-01-02T09:30:00Z"),
            ("c", "GA1", Lifecycle::Complete, "2017-01-02T09:40:00Z"),
        ]);
        let map = BTreeMap::from([
            ("GA0".to_string(), None),
            ("GA1".to_string(), Some("GA0".to_string())),
            ("SA1".to_string(), Some("GA0".to_string())),
        ]);
        let s = station_stats(&log, &Calendar::default(), &Upstream::Explicit(map));
        assert_eq!(s.stations["GA1"].waiting.mean, 20.0 * 60.0);
        assert_eq!(s.stations["SA1"].waiting.mean, 60.0);
        let p = station_stats(&log, &Calendar::default(), &Upstream::PreviousComplete);
        assert_eq!(p.stations["GA1"].waiting.mean, 10.0 * 60.0);
    }

    #[test]
    fn ranking_descending_with_label_ties() {
        let mut stats = StationStats::default();
        for (s, m) in [("B", 10.0), ("A", 20.0), ("C", 10.0)] {
            let sum = Summary {
                count: 1,
                mean: m,
                median: m,
                p95: m,
            };
            stats.stations.insert(
                s.into(),
                StationStat {
                    service: sum,
                    waiting: sum,
                    sojourn: sum,
                },
            );
        }
        let r: Vec<String> = bottleneck_ranking(&stats, Metric::Service).into_iter().map(|x| x.0).collect();
        assert_eq!(r, ["A", "B", "C"]);
        assert!(matches!("latency".parse::<Metric>(), Err(Error::UnknownMetric(_))));
    }

    #[test]
    fn rolling_mean_shape() {
        assert_eq!(rolling_mean(&[5.0; 12], 10), vec![(10, 5.0), (11, 5.0), (12, 5.0)]);
        assert!(rolling_mean(&[1.0; 3], 10).is_empty());
        let mut step = vec![300.0; 20];
        step.extend([600.0; 20]);
        let r = rolling_mean(&step, 10);
        let cross = r.iter().find(|(_, m)| *m >= 450.0).unwrap().0;
        assert!((20..=30).contains(&cross));
    }

    #[test]
    fn bands_split_at_quantiles() {
        let r: Vec<(String, f64)> = [("A", 1.0), ("B", 2.0), ("C", 3.0), ("D", 10.0)]
            .iter()
            .map(|(s, v)| (s.to_string(), *v))
            .collect();
        let b = quantile_bands(&r, 3);
        assert_eq!([b["A"], b["B"], b["C"], b["D"]], [0, 0, 1, 2]);
        assert!(quantile_bands(&r, 1).values().all(|&x| x == 0));
    }

    #[test]
    fn quantiles_interpolate() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.mean, 2.5);
        assert!((s.p95 - 3.85).abs() < 1e-12);
    }
}
