//! Change points in per-car sojourn series.
//!
//! At every index t the `window` values before t are compared with the
//! `window` values from t on by a rank-sum test. Runs of at least
//! `consecutive` indices whose |z| exceeds the threshold yield one candidate
//! at the run's maximum; candidates closer than `min_segment` to a stronger
//! one are dropped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_model::TraceLog;
use crate::performance::{rolling_mean, series_of, visits, RollingSeries, Upstream};
use crate::time::Calendar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftParams {
    pub window: usize,
    /// Minimum |z| of the rank-sum statistic.
    pub threshold: f64,
    pub min_segment: usize,
    pub consecutive: usize,
}

impl Default for DriftParams {
    fn default() -> Self {
        DriftParams {
            window: 50,
            threshold: 4.5,
            min_segment: 100,
            consecutive: 3,
        }
    }
}

impl DriftParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 5 {
            return Err(Error::Parameter("drift window must be at least 5".into()));
        }
        if self.consecutive < 1 {
            return Err(Error::Parameter("consecutive exceedances must be at least 1".into()));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::Parameter("drift threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub station: String,
    /// Index of the first value after the change.
    pub ordinal: usize,
    pub direction: Direction,
    /// Mean of the following segment over mean of the preceding one.
    pub magnitude: f64,
    pub statistic: f64,
}

/// Normal approximation of the Mann-Whitney U statistic of `b` against `a`,
/// with tie correction. Positive when `b` tends to be larger.
pub fn rank_sum_z(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut all: Vec<(f64, bool)> = a.iter().map(|&x| (x, false)).chain(b.iter().map(|&x| (x, true))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = all.len();
    let mut rank_b = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_b += avg * all[i..=j].iter().filter(|x| x.1).count() as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let u = rank_b - n2 * (n2 + 1.0) / 2.0;
    let nn = n1 + n2;
    let var = n1 * n2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if var <= 0.0 {
        return 0.0;
    }
    (u - n1 * n2 / 2.0) / var.sqrt()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Change points of one series. `station` only labels the output.
pub fn detect_change_points(station: &str, series: &[f64], params: &DriftParams) -> Result<Vec<ChangePoint>> {
    params.validate()?;
    let w = params.window;
    if series.len() < 2 * w {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            needed: 2 * w,
        });
    }
    let stats: Vec<(usize, f64)> = (w..=series.len() - w)
        .map(|t| (t, rank_sum_z(&series[t - w..t], &series[t..t + w])))
        .collect();
    let mut candidates: Vec<(usize, f64)> = Vec::new();
    let mut run: Vec<(usize, f64)> = Vec::new();
    let flush = |run: &mut Vec<(usize, f64)>, out: &mut Vec<(usize, f64)>| {
        if run.len() >= params.consecutive {
            let best = run
                .iter()
                .copied()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then_with(|| b.0.cmp(&a.0)))
                .expect("non-empty run");
            out.push(best);
        }
        run.clear();
    };
    for &(t, z) in &stats {
        let same_sign = run.last().is_none_or(|&(_, prev)| prev.signum() == z.signum());
        if z.abs() >= params.threshold && same_sign {
            run.push((t, z));
        } else {
            flush(&mut run, &mut candidates);
            if z.abs() >= params.threshold {
                run.push((t, z));
            }
        }
    }
    flush(&mut run, &mut candidates);

    // strongest first, enforcing the minimum spacing
    candidates.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
    let mut kept: Vec<(usize, f64)> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| k.0.abs_diff(c.0) >= params.min_segment) {
            kept.push(c);
        }
    }
    kept.sort_by_key(|k| k.0);

    let mut out = Vec::with_capacity(kept.len());
    for (i, &(t, z)) in kept.iter().enumerate() {
        let lo = if i == 0 { 0 } else { kept[i - 1].0 };
        let hi = kept.get(i + 1).map_or(series.len(), |k| k.0);
        let (pre, post) = (mean(&series[lo..t]), mean(&series[t..hi]));
        let magnitude = if pre > 0.0 { post / pre } else { f64::INFINITY };
        out.push(ChangePoint {
            station: station.to_string(),
            ordinal: t,
            direction: if post >= pre { Direction::Increase } else { Direction::Decrease },
            magnitude,
            statistic: z,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationDrift {
    pub change_points: Vec<ChangePoint>,
    pub rolling: RollingSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub params: DriftParams,
    pub stations: BTreeMap<String, StationDrift>,
}

impl DriftReport {
    pub fn flagged(&self) -> Vec<&str> {
        self.stations
            .iter()
            .filter(|(_, d)| !d.change_points.is_empty())
            .map(|(s, _)| s.as_str())
            .collect()
    }

    pub fn change_points(&self) -> impl Iterator<Item = &ChangePoint> {
        self.stations.values().flat_map(|d| d.change_points.iter())
    }
}

/// Detect change points in the sojourn series of each station (cars in
/// completion order) and attach the rolling mean over `rolling_window` cars.
pub fn drift_report(
    log: &TraceLog,
    stations: &[String],
    params: &DriftParams,
    rolling_window: usize,
    calendar: &Calendar,
    upstream: &Upstream,
) -> Result<DriftReport> {
    let (vs, _) = visits(log, calendar, upstream);
    let mut out = BTreeMap::new();
    for s in stations {
        let series: Vec<f64> = series_of(&vs, s).into_iter().map(|(_, v)| v).collect();
        let change_points = detect_change_points(s, &series, params)?;
        let rolling = RollingSeries {
            station: s.clone(),
            window: rolling_window,
            points: rolling_mean(&series, rolling_window),
        };
        out.insert(s.clone(), StationDrift { change_points, rolling });
    }
    Ok(DriftReport {
        params: *params,
        stations: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_has_no_change() {
        assert!(detect_change_points("GA6", &[300.0; 400], &DriftParams::default()).unwrap().is_empty());
    }

    #[test]
    fn noiseless_step_is_exact() {
        let mut s = vec![300.0; 350];
        s.extend([450.0; 350]);
        let cps = detect_change_points("GA4", &s, &DriftParams::default()).unwrap();
        assert_eq!(cps.len(), 1);
        assert_eq!(cps[0].ordinal, 350);
        assert_eq!(cps[0].direction, Direction::Increase);
        assert!((cps[0].magnitude - 1.5).abs() < 1e-12);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            detect_change_points("x", &[1.0; 99], &DriftParams::default()),
            Err(Error::SeriesTooShort { len: 99, needed: 100 })
        ));
    }

    #[test]
    fn rank_sum_sign_and_ties() {
        assert!(rank_sum_z(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]) > 0.0);
        assert!(rank_sum_z(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0]) < 0.0);
        assert_eq!(rank_sum_z(&[1.0; 5], &[1.0; 5]), 0.0);
    }
}
