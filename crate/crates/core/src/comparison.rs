//! Comparing two logs: Earth Mover's Distance between station duration
//! distributions and between variant distributions, histogram shape hints,
//! and paired per-case duration tables.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_model::TraceLog;
use crate::performance::{quantile, visits, Upstream, Visit};
use crate::time::Calendar;

/// Wasserstein-1 distance between the empirical distributions of two
/// samples: the integral of |F_a - F_b|.
pub fn duration_emd(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("duration sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut prev = a[0].min(b[0]);
    let mut total = 0.0;
    while i < na || j < nb {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        let gap = (i as f64 / na as f64 - j as f64 / nb as f64).abs();
        total += gap * (x - prev);
        prev = x;
        while i < na && a[i] == x {
            i += 1;
        }
        while j < nb && b[j] == x {
            j += 1;
        }
    }
    Ok(total)
}

pub type Variant = Vec<String>;

/// Relative frequency of each activity sequence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VariantDistribution {
    pub frequencies: BTreeMap<Variant, f64>,
    /// True when rare variants were cut off and the rest renormalised.
    pub truncated: bool,
}

pub const DEFAULT_MAX_VARIANTS: usize = 200;

impl VariantDistribution {
    pub fn from_log(log: &TraceLog) -> Self {
        let mut counts: BTreeMap<Variant, usize> = BTreeMap::new();
        for (_, seq) in log.activity_sequences() {
            *counts.entry(seq).or_default() += 1;
        }
        let n: usize = counts.values().sum();
        VariantDistribution {
            frequencies: counts.into_iter().map(|(v, c)| (v, c as f64 / n as f64)).collect(),
            truncated: false,
        }
    }

    /// Keep the `k` most frequent variants (ties lexicographic) and renormalise.
    pub fn top(&self, k: usize) -> Self {
        if self.frequencies.len() <= k {
            return self.clone();
        }
        let mut v: Vec<(&Variant, f64)> = self.frequencies.iter().map(|(s, f)| (s, *f)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v.truncate(k);
        let total: f64 = v.iter().map(|x| x.1).sum();
        VariantDistribution {
            frequencies: v.into_iter().map(|(s, f)| (s.clone(), f / total)).collect(),
            truncated: true,
        }
    }

    fn check(&self) -> Result<()> {
        let s: f64 = self.frequencies.values().sum();
        if self.frequencies.values().any(|f| !(*f >= 0.0)) || (s - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(s));
        }
        Ok(())
    }
}

/// Edit distance divided by the longer length (0 for two empty sequences).
pub fn normalized_levenshtein<S: PartialEq>(a: &[S], b: &[S]) -> f64 {
    let m = a.len().max(b.len());
    if m == 0 {
        return 0.0;
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()] as f64 / m as f64
}

const SCALE: f64 = 1e9;

/// Split `SCALE` units over `weights` proportionally, exactly (largest remainder).
fn integer_masses(weights: &[f64]) -> Vec<i64> {
    let total: f64 = weights.iter().sum();
    let raw: Vec<f64> = weights.iter().map(|w| w / total * SCALE).collect();
    let mut m: Vec<i64> = raw.iter().map(|r| r.floor() as i64).collect();
    let short = SCALE as i64 - m.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..m.len()).collect();
    order.sort_by(|&i, &j| (raw[j] - raw[j].floor()).total_cmp(&(raw[i] - raw[i].floor())).then(i.cmp(&j)));
    for &i in order.iter().cycle().take(short.max(0) as usize) {
        m[i] += 1;
    }
    m
}

/// Minimum-cost transportation between integer supplies and demands of
/// equal total, by successive shortest paths with potentials.
pub fn min_cost_transport(supply: &[i64], demand: &[i64], cost: &[Vec<i64>]) -> i64 {
    #[derive(Clone)]
    struct Edge {
        to: usize,
        cap: i64,
        cost: i64,
    }
    let (n, m) = (supply.len(), demand.len());
    let (src, sink) = (n + m, n + m + 1);
    let nodes = n + m + 2;
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut add = |u: usize, v: usize, cap: i64, cost: i64, edges: &mut Vec<Edge>| {
        adj[u].push(edges.len());
        edges.push(Edge { to: v, cap, cost });
        adj[v].push(edges.len());
        edges.push(Edge { to: u, cap: 0, cost: -cost });
    };
    for (i, &s) in supply.iter().enumerate() {
        add(src, i, s, 0, &mut edges);
    }
    for (j, &d) in demand.iter().enumerate() {
        add(n + j, sink, d, 0, &mut edges);
    }
    for i in 0..n {
        for j in 0..m {
            add(i, n + j, i64::MAX / 4, cost[i][j], &mut edges);
        }
    }
    let need: i64 = supply.iter().sum();
    let mut flow = 0;
    let mut total = 0i64;
    // all initial costs are non-negative, so zero potentials are feasible
    let mut pot = vec![0i64; nodes];
    while flow < need {
        let mut dist = vec![i64::MAX; nodes];
        let mut via = vec![usize::MAX; nodes];
        dist[src] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0i64, src)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &e in &adj[u] {
                let ed = &edges[e];
                if ed.cap <= 0 {
                    continue;
                }
                let nd = d + ed.cost + pot[u] - pot[ed.to];
                if nd < dist[ed.to] {
                    dist[ed.to] = nd;
                    via[ed.to] = e;
                    heap.push(Reverse((nd, ed.to)));
                }
            }
        }
        if dist[sink] == i64::MAX {
            break;
        }
        for v in 0..nodes {
            if dist[v] < i64::MAX {
                pot[v] += dist[v];
            }
        }
        let mut push = need - flow;
        let mut v = sink;
        while v != src {
            let e = via[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != src {
            let e = via[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            total += push * edges[e].cost;
            v = edges[e ^ 1].to;
        }
        flow += push;
    }
    total
}

/// Earth Mover's Distance between variant distributions under the
/// normalized edit distance. Masses and costs are scaled to integers at
/// 1e-9 resolution and solved exactly.
pub fn variant_emd(a: &VariantDistribution, b: &VariantDistribution) -> Result<f64> {
    a.check()?;
    b.check()?;
    if a.frequencies.is_empty() || b.frequencies.is_empty() {
        return Err(Error::EmptySamples);
    }
    let va: Vec<(&Variant, f64)> = a.frequencies.iter().map(|(v, f)| (v, *f)).collect();
    let vb: Vec<(&Variant, f64)> = b.frequencies.iter().map(|(v, f)| (v, *f)).collect();
    let supply = integer_masses(&va.iter().map(|x| x.1).collect::<Vec<_>>());
    let demand = integer_masses(&vb.iter().map(|x| x.1).collect::<Vec<_>>());
    let cost: Vec<Vec<i64>> = va
        .iter()
        .map(|(x, _)| vb.iter().map(|(y, _)| (normalized_levenshtein(x, y) * SCALE).round() as i64).collect())
        .collect();
    Ok(min_cost_transport(&supply, &demand, &cost) as f64 / (SCALE * SCALE))
}

/// Number of histogram peaks with Freedman-Diaconis bins. A peak is a
/// maximal run of equal bin counts higher than both neighbours (outside the
/// range counts as 0) and at least 10% of the highest bin.
pub fn peak_count(samples: &[f64]) -> usize {
    if samples.is_empty() {
        return 0;
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let iqr = quantile(&v, 0.75) - quantile(&v, 0.25);
    let h = 2.0 * iqr / (v.len() as f64).cbrt();
    if !(h > 0.0) || hi == lo {
        return 1;
    }
    let bins = (((hi - lo) / h).ceil() as usize).max(1);
    let mut counts = vec![0usize; bins];
    for x in &v {
        counts[(((x - lo) / h) as usize).min(bins - 1)] += 1;
    }
    let max = *counts.iter().max().expect("bins");
    let mut peaks = 0;
    let mut i = 0;
    while i < bins {
        let mut j = i;
        while j + 1 < bins && counts[j + 1] == counts[i] {
            j += 1;
        }
        let left = if i == 0 { 0 } else { counts[i - 1] };
        let right = counts.get(j + 1).copied().unwrap_or(0);
        if counts[i] > left && counts[i] > right && counts[i] as f64 >= 0.1 * max as f64 {
            peaks += 1;
        }
        i = j + 1;
    }
    peaks
}

/// Spearman rank correlation; `None` for fewer than 3 pairs or a constant side.
pub fn spearman(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 3 {
        return None;
    }
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0 + 1.0;
            }
            i = j + 1;
        }
        r
    }
    let x = ranks(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let y = ranks(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    pearson(&x, &y)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Two-sided 95% bound on a rank correlation under independence.
pub fn correlation_bound(n: usize) -> f64 {
    1.96 / ((n.max(2) - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub case_id: String,
    pub x: f64,
    pub y: f64,
    pub resource_x: Option<String>,
    pub resource_y: Option<String>,
}

/// Per-case service durations (seconds) at two stations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub x: String,
    pub y: String,
    pub rows: Vec<PairRow>,
    /// Cases that visited only one of the stations.
    pub excluded: usize,
}

impl PairTable {
    pub fn spearman(&self) -> Option<f64> {
        spearman(&self.rows.iter().map(|r| (r.x, r.y)).collect::<Vec<_>>())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["case", &self.x, &self.y, "resource_x", "resource_y"])?;
        for r in &self.rows {
            w.write_record([
                r.case_id.as_str(),
                &r.x.to_string(),
                &r.y.to_string(),
                r.resource_x.as_deref().unwrap_or(""),
                r.resource_y.as_deref().unwrap_or(""),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn first_visits<'v>(vs: &'v [Visit], station: &str) -> BTreeMap<&'v str, &'v Visit> {
    let mut m = BTreeMap::new();
    for v in vs.iter().filter(|v| v.station == station) {
        m.entry(v.case_id.as_str()).or_insert(v);
    }
    m
}

fn pair_table_from(vs: &[Visit], cases: usize, x: &str, y: &str) -> PairTable {
    let (mx, my) = (first_visits(vs, x), first_visits(vs, y));
    let rows: Vec<PairRow> = mx
        .iter()
        .filter_map(|(c, vx)| {
            my.get(c).map(|vy| PairRow {
                case_id: c.to_string(),
                x: vx.service,
                y: vy.service,
                resource_x: vx.resource.clone(),
                resource_y: vy.resource.clone(),
            })
        })
        .collect();
    let either = mx.keys().chain(my.keys()).collect::<std::collections::BTreeSet<_>>().len();
    debug_assert!(either <= cases);
    PairTable {
        x: x.to_string(),
        y: y.to_string(),
        excluded: either - rows.len(),
        rows,
    }
}

pub fn pair_table(log: &TraceLog, x: &str, y: &str, calendar: &Calendar) -> PairTable {
    let (vs, _) = visits(log, calendar, &Upstream::PreviousComplete);
    pair_table_from(&vs, log.len(), x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    /// p95 / median.
    pub tail_index: f64,
    pub peaks: usize,
}

impl DistributionSummary {
    pub fn of(samples: &[f64]) -> Self {
        let s = crate::performance::Summary::of(samples);
        DistributionSummary {
            count: s.count,
            mean: s.mean,
            median: s.median,
            p95: s.p95,
            tail_index: if s.median > 0.0 { s.p95 / s.median } else { f64::NAN },
            peaks: peak_count(samples),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationComparison {
    pub emd: f64,
    pub a: DistributionSummary,
    pub b: DistributionSummary,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub x: String,
    pub y: String,
    pub spearman_a: Option<f64>,
    pub spearman_b: Option<f64>,
    pub bound_a: f64,
    pub bound_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Stations present in both logs.
    pub stations: BTreeMap<String, StationComparison>,
    pub variant_emd: f64,
    pub variants_truncated: bool,
    pub pairs: Vec<PairComparison>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub pairs: Vec<(String, String)>,
    pub max_variants: usize,
    /// Relative difference in tail index needed for a tail flag.
    pub tail_tolerance: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            pairs: Vec::new(),
            max_variants: DEFAULT_MAX_VARIANTS,
            tail_tolerance: 0.05,
        }
    }
}

fn durations_by_station(vs: &[Visit]) -> BTreeMap<&str, Vec<f64>> {
    let mut m: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for v in vs {
        m.entry(&v.station).or_default().push(v.service);
    }
    m
}

/// Compare service-time distributions per station, variants, and paired
/// durations of `options.pairs`.
pub fn compare_report(a: &TraceLog, b: &TraceLog, calendar: &Calendar, options: &CompareOptions) -> Result<ComparisonReport> {
    let (va, _) = visits(a, calendar, &Upstream::PreviousComplete);
    let (vb, _) = visits(b, calendar, &Upstream::PreviousComplete);
    let (da, db) = (durations_by_station(&va), durations_by_station(&vb));
    let mut stations = BTreeMap::new();
    for (s, xa) in &da {
        let Some(xb) = db.get(s) else { continue };
        let (sa, sb) = (DistributionSummary::of(xa), DistributionSummary::of(xb));
        let mut flags = Vec::new();
        if sa.tail_index > sb.tail_index * (1.0 + options.tail_tolerance) {
            flags.push("longer tail in a".to_string());
        } else if sb.tail_index > sa.tail_index * (1.0 + options.tail_tolerance) {
            flags.push("longer tail in b".to_string());
        }
        if sa.peaks != sb.peaks {
            flags.push(format!("peak count differs ({} vs {})", sa.peaks, sb.peaks));
        }
        stations.insert(
            s.to_string(),
            StationComparison {
                emd: duration_emd(xa, xb)?,
                a: sa,
                b: sb,
                flags,
            },
        );
    }
    let (fa, fb) = (VariantDistribution::from_log(a), VariantDistribution::from_log(b));
    let (ta, tb) = (fa.top(options.max_variants), fb.top(options.max_variants));
    let variant_emd = if ta.frequencies.is_empty() || tb.frequencies.is_empty() {
        0.0
    } else {
        variant_emd(&ta, &tb)?
    };
    let pairs = options
        .pairs
        .iter()
        .map(|(x, y)| {
            let (pa, pb) = (pair_table_from(&va, a.len(), x, y), pair_table_from(&vb, b.len(), x, y));
            PairComparison {
                x: x.clone(),
                y: y.clone(),
                spearman_a: pa.spearman(),
                spearman_b: pb.spearman(),
                bound_a: correlation_bound(pa.rows.len()),
                bound_b: correlation_bound(pb.rows.len()),
            }
        })
        .collect();
    Ok(ComparisonReport {
        stations,
        variant_emd,
        variants_truncated: ta.truncated || tb.truncated,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(items: &[(&[&str], f64)]) -> VariantDistribution {
        VariantDistribution {
            frequencies: items
                .iter()
                .map(|(v, f)| (v.iter().map(|s| s.to_string()).collect(), *f))
                .collect(),
            truncated: false,
        }
    }

    #[test]
    fn point_masses() {
        assert_eq!(duration_emd(&[0.0], &[10.0]).unwrap(), 10.0);
        assert_eq!(duration_emd(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(duration_emd(&[], &[1.0]), Err(Error::EmptySamples)));
    }

    #[test]
    fn unequal_sizes() {
        // F_a jumps to 1 at 0; F_b is 1/2 on [0, 2)
        assert!((duration_emd(&[0.0], &[0.0, 2.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_unit_variants() {
        let a = dist(&[(&["A"], 1.0)]);
        let b = dist(&[(&["B"], 1.0)]);
        assert_eq!(variant_emd(&a, &b).unwrap(), 1.0);
        assert_eq!(variant_emd(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn unnormalised_rejected() {
        let a = dist(&[(&["A"], 0.7)]);
        assert!(matches!(variant_emd(&a, &a), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn levenshtein() {
        assert_eq!(normalized_levenshtein(&["A", "B", "C"], &["A", "C"]), 1.0 / 3.0);
        assert_eq!(normalized_levenshtein::<&str>(&[], &[]), 0.0);
    }

    #[test]
    fn masses_sum_exactly() {
        let m = integer_masses(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(m.iter().sum::<i64>(), 1_000_000_000);
    }

    #[test]
    fn bimodal_histogram_has_two_peaks() {
        let mut s: Vec<f64> = (0..100).map(|i| 5.0 + (i % 10) as f64 * 0.05).collect();
        s.extend((0..200).map(|i| 10.0 + (i % 10) as f64 * 0.05));
        assert_eq!(peak_count(&s), 2);
        assert_eq!(peak_count(&[3.0; 10]), 1);
    }

    #[test]
    fn spearman_monotone() {
        let p: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, -(i as f64).powi(3))).collect();
        assert!((spearman(&p).unwrap() + 1.0).abs() < 1e-12);
    }
}
