//! Independent oracles and random generators shared by the property and
//! acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use pmline::discovery::{Lts, ProcessTree};
use pmline::event_model::{AttrValue, Event, EventLog};
use pmline::ocpm::{ObjectCentricLog, OcEvent, OcObject};
use rand::Rng;

pub const LABELS: [&str; 4] = ["A", "B", "C", "D"];

// ---------------------------------------------------------------- LP oracle

const EPS: f64 = 1e-12;

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c];
    for x in t[r].iter_mut() {
        *x /= p;
    }
    let row = t[r].clone();
    for (i, other) in t.iter_mut().enumerate() {
        if i != r && other[c] != 0.0 {
            let f = other[c];
            for (x, y) in other.iter_mut().zip(&row) {
                *x -= f * y;
            }
        }
    }
    basis[r] = c;
}

/// Primal simplex with Bland's rule; columns `>= allowed` never enter.
fn simplex(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) {
    let w = t[0].len();
    loop {
        let entering = (0..allowed).find(|&j| {
            let d = cost[j] - t.iter().zip(basis.iter()).map(|(row, &b)| cost[b] * row[j]).sum::<f64>();
            d < -1e-10
        });
        let Some(j) = entering else { return };
        let mut best: Option<(f64, usize, usize)> = None;
        for (r, row) in t.iter().enumerate() {
            if row[j] > EPS {
                let ratio = row[w - 1] / row[j];
                let better = match best {
                    None => true,
                    Some((q, _, b)) => ratio < q - 1e-15 || ((ratio - q).abs() <= 1e-15 && basis[r] < b),
                };
                if better {
                    best = Some((ratio, r, basis[r]));
                }
            }
        }
        let (_, r, _) = best.expect("transportation problems are bounded");
        pivot(t, basis, r, j);
    }
}

/// min c.x subject to a x = b, x >= 0, with b >= 0; two-phase simplex.
pub fn lp_min(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    let (m, n) = (a.len(), c.len());
    let w = n + m + 1;
    let mut t = vec![vec![0.0; w]; m];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][w - 1] = b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut phase1 = vec![0.0; n + m];
    phase1[n..].iter_mut().for_each(|x| *x = 1.0);
    simplex(&mut t, &mut basis, &phase1, n + m);
    for r in 0..m {
        if basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| t[r][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, r, j);
            }
        }
    }
    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat_n(0.0, m));
    simplex(&mut t, &mut basis, &phase2, n);
    t.iter().zip(&basis).map(|(row, &bi)| phase2[bi] * row[w - 1]).sum()
}

/// Wasserstein-1 between two empirical samples as a transportation LP.
/// Masses are scaled to integers (m per source, n per sink).
pub fn emd_lp(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut cost = Vec::with_capacity(n * m);
    for x in a {
        for y in b {
            cost.push((x - y).abs());
        }
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..n {
        let mut r = vec![0.0; n * m];
        r[i * m..(i + 1) * m].iter_mut().for_each(|x| *x = 1.0);
        rows.push(r);
        rhs.push(m as f64);
    }
    for j in 0..m {
        let mut r = vec![0.0; n * m];
        for i in 0..n {
            r[i * m + j] = 1.0;
        }
        rows.push(r);
        rhs.push(n as f64);
    }
    lp_min(&cost, &rows, &rhs) / (n * m) as f64
}

// --------------------------------------------------------- alignment oracle

/// Minimal unit-cost alignment by Bellman-Ford relaxation over
/// (state, trace position); `None` when no final state is reachable.
pub fn align_cost_oracle(trace: &[String], lts: &Lts) -> Option<u32> {
    let n = trace.len();
    let s = lts.state_count();
    let mut d = vec![vec![u32::MAX; n + 1]; s];
    d[lts.initial][0] = 0;
    loop {
        let mut changed = false;
        for st in 0..s {
            for i in 0..=n {
                let c = d[st][i];
                if c == u32::MAX {
                    continue;
                }
                let mut relax = |to: usize, j: usize, cost: u32| {
                    if cost < d[to][j] {
                        d[to][j] = cost;
                        changed = true;
                    }
                };
                if i < n {
                    relax(st, i + 1, c + 1);
                }
                for &(label, to) in &lts.transitions[st] {
                    match label {
                        None => relax(to, i, c),
                        Some(l) => {
                            relax(to, i, c + 1);
                            if i < n && lts.alphabet[l as usize] == trace[i] {
                                relax(to, i + 1, c);
                            }
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    lts.finals.iter().map(|&f| d[f][n]).filter(|&c| c != u32::MAX).min()
}

/// Random LTS with at most `max_states` states and a reachable final state.
pub fn random_lts<R: Rng>(rng: &mut R, max_states: usize) -> Lts {
    let n = rng.random_range(1..=max_states);
    let mut lts = Lts::new(n, 0);
    let label = |rng: &mut R| -> Option<&'static str> {
        if rng.random_bool(0.15) {
            None
        } else {
            Some(LABELS[rng.random_range(0..LABELS.len())])
        }
    };
    let f = rng.random_range(0..n);
    for k in 0..f {
        let l = label(rng);
        lts.add_transition(k, l, k + 1);
    }
    for _ in 0..rng.random_range(0..=2 * n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let l = label(rng);
        lts.add_transition(a, l, b);
    }
    lts.add_final(f);
    if rng.random_bool(0.3) {
        lts.add_final(rng.random_range(0..n));
    }
    lts
}

/// Random trace over A..E (E never occurs in generated models).
pub fn random_trace<R: Rng>(rng: &mut R, max_len: usize) -> Vec<String> {
    (0..rng.random_range(0..=max_len))
        .map(|_| ["A", "B", "C", "D", "E"][rng.random_range(0..5)].to_string())
        .collect()
}

// ----------------------------------------------------- tree language oracle

pub fn random_tree<R: Rng>(rng: &mut R, depth: usize) -> ProcessTree {
    if depth == 0 || rng.random_bool(0.35) {
        return if rng.random_bool(0.1) {
            ProcessTree::Silent
        } else {
            ProcessTree::activity(LABELS[rng.random_range(0..LABELS.len())])
        };
    }
    let k = rng.random_range(2..=3);
    let children: Vec<ProcessTree> = (0..k).map(|_| random_tree(rng, depth - 1)).collect();
    match rng.random_range(0..4) {
        0 => ProcessTree::seq(children),
        1 => ProcessTree::xor(children),
        2 => ProcessTree::par(children),
        _ => ProcessTree::Loop { children },
    }
}

type Words = BTreeSet<Vec<String>>;

fn concat(a: &Words, b: &Words, max: usize) -> Words {
    let mut out = Words::new();
    for x in a {
        for y in b {
            if x.len() + y.len() <= max {
                let mut w = x.clone();
                w.extend(y.iter().cloned());
                out.insert(w);
            }
        }
    }
    out
}

fn shuffles(x: &[String], y: &[String], out: &mut Words, prefix: &mut Vec<String>) {
    if x.is_empty() || y.is_empty() {
        let mut w = prefix.clone();
        w.extend(x.iter().chain(y).cloned());
        out.insert(w);
        return;
    }
    prefix.push(x[0].clone());
    shuffles(&x[1..], y, out, prefix);
    prefix.pop();
    prefix.push(y[0].clone());
    shuffles(x, &y[1..], out, prefix);
    prefix.pop();
}

fn interleave(a: &Words, b: &Words, max: usize) -> Words {
    let mut out = Words::new();
    for x in a {
        for y in b {
            if x.len() + y.len() <= max {
                shuffles(x, y, &mut out, &mut Vec::new());
            }
        }
    }
    out
}

/// Words of length at most `max` in the language of `tree`, computed from
/// the operator definitions.
pub fn tree_language(tree: &ProcessTree, max: usize) -> Words {
    match tree {
        ProcessTree::Activity { label } => [vec![label.clone()]].into_iter().filter(|_| max >= 1).collect(),
        ProcessTree::Silent => [Vec::new()].into_iter().collect(),
        ProcessTree::Sequence { children } => children
            .iter()
            .fold([Vec::new()].into_iter().collect(), |acc, c| concat(&acc, &tree_language(c, max), max)),
        ProcessTree::Xor { children } => children.iter().flat_map(|c| tree_language(c, max)).collect(),
        ProcessTree::Parallel { children } => children
            .iter()
            .fold([Vec::new()].into_iter().collect(), |acc, c| interleave(&acc, &tree_language(c, max), max)),
        ProcessTree::Loop { children } => {
            let body = tree_language(&children[0], max);
            let redo: Words = children[1..].iter().flat_map(|c| tree_language(c, max)).collect();
            let step = concat(&redo, &body, max);
            let mut all = body.clone();
            let mut frontier = body;
            while !frontier.is_empty() {
                let next: Words = concat(&frontier, &step, max).difference(&all).cloned().collect();
                all.extend(next.iter().cloned());
                frontier = next;
            }
            all
        }
    }
}

// ------------------------------------------------------------ random logs

pub const COLORS: [&str; 3] = ["white", "blue", "red"];
pub const CITIES: [(&str, &str); 4] = [
    ("Amsterdam", "Netherlands"),
    ("Utrecht", "Netherlands"),
    ("Brussels", "Belgium"),
    ("Ghent", "Belgium"),
];

pub fn countries() -> BTreeMap<String, String> {
    CITIES.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

/// Events with `color`, `city` and timestamps spread over 2016..2019.
pub fn random_cube_log<R: Rng>(rng: &mut R, max_events: usize) -> EventLog {
    let n = rng.random_range(1..=max_events);
    let base = pmline::time::parse_timestamp("2016-01-01T00:00:00Z", None).unwrap();
    let four_years = 4 * 365 * 86_400_000i64;
    let events = (0..n)
        .map(|i| {
            Event::new(format!("e{i}"), LABELS[rng.random_range(0..4)], base + rng.random_range(0..four_years))
                .with_case(format!("c{}", rng.random_range(0..30)))
                .with_attr("color", AttrValue::Str(COLORS[rng.random_range(0..3)].into()))
                .with_attr("city", AttrValue::Str(CITIES[rng.random_range(0..4)].0.into()))
        })
        .collect();
    EventLog::from_events(events).unwrap()
}

/// Random object-centric log over types order/product/component, in time order.
pub fn random_ocel<R: Rng>(rng: &mut R, max_events: usize) -> ObjectCentricLog {
    let types = [("order", 3usize), ("product", 5), ("component", 6)];
    let mut objects = BTreeMap::new();
    for (t, k) in types {
        for i in 0..k {
            objects.insert(
                format!("{t}{i}"),
                OcObject {
                    object_type: t.into(),
                    attrs: BTreeMap::new(),
                },
            );
        }
    }
    let mut ts = 0i64;
    let events = (0..rng.random_range(1..=max_events))
        .map(|i| {
            ts += rng.random_range(0..5) * 60_000;
            let mut omap: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
            while omap.is_empty() {
                for (t, k) in types {
                    for j in 0..k {
                        if rng.random_bool(0.15) {
                            omap.entry(t.to_string()).or_default().insert(format!("{t}{j}"));
                        }
                    }
                }
            }
            OcEvent {
                event_id: format!("oe{i}"),
                activity: LABELS[rng.random_range(0..4)].into(),
                timestamp: ts,
                omap,
                attrs: BTreeMap::new(),
            }
        })
        .collect();
    ObjectCentricLog { objects, events }
}
