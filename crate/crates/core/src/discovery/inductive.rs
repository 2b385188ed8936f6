//! Inductive miner with optional infrequent-arc filtering.

use std::collections::{BTreeMap, BTreeSet};

use super::tree::ProcessTree;
use crate::error::{Error, Result};
use crate::event_model::TraceLog;

type Trace = Vec<u32>;
type SubLog = BTreeMap<Trace, u64>;

/// Discover a process tree from the complete events of a trace log.
///
/// With `noise_threshold = 0` every trace of the input replays on the result.
/// An empty log yields a silent leaf.
pub fn discover_tree(log: &TraceLog, noise_threshold: f64) -> Result<ProcessTree> {
    let sequences: Vec<Vec<String>> = log.activity_sequences().into_iter().map(|(_, s)| s).collect();
    discover_tree_from_sequences(&sequences, noise_threshold)
}

pub fn discover_tree_from_sequences(sequences: &[Vec<String>], noise_threshold: f64) -> Result<ProcessTree> {
    if !(0.0..1.0).contains(&noise_threshold) {
        return Err(Error::Parameter(format!("noise threshold {noise_threshold} outside [0,1)")));
    }
    let names: Vec<String> = sequences
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let ids: BTreeMap<&str, u32> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i as u32)).collect();
    let mut log = SubLog::new();
    for s in sequences {
        *log.entry(s.iter().map(|a| ids[a.as_str()]).collect()).or_default() += 1;
    }
    let miner = Miner {
        names: &names,
        noise: noise_threshold,
    };
    Ok(miner.mine(&log).flattened())
}

struct Miner<'a> {
    names: &'a [String],
    noise: f64,
}

/// Directly-follows counts over the activities of a sublog.
struct Graph {
    acts: Vec<u32>,
    df: Vec<Vec<u64>>,
    start: Vec<u64>,
    end: Vec<u64>,
}

impl Graph {
    fn new(log: &SubLog, noise: f64) -> Graph {
        let acts: Vec<u32> = log.keys().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let pos = |a: u32| acts.binary_search(&a).expect("activity present");
        let n = acts.len();
        let mut g = Graph {
            df: vec![vec![0; n]; n],
            start: vec![0; n],
            end: vec![0; n],
            acts: acts.clone(),
        };
        for (t, &c) in log {
            let (Some(&f), Some(&l)) = (t.first(), t.last()) else {
                continue;
            };
            g.start[pos(f)] += c;
            g.end[pos(l)] += c;
            for w in t.windows(2) {
                g.df[pos(w[0])][pos(w[1])] += c;
            }
        }
        if noise > 0.0 {
            for row in &mut g.df {
                let max = row.iter().copied().max().unwrap_or(0) as f64;
                row.iter_mut().filter(|v| (**v as f64) < noise * max).for_each(|v| *v = 0);
            }
            for v in [&mut g.start, &mut g.end] {
                let max = v.iter().copied().max().unwrap_or(0) as f64;
                v.iter_mut().filter(|x| (**x as f64) < noise * max).for_each(|x| *x = 0);
            }
        }
        g
    }

    fn n(&self) -> usize {
        self.acts.len()
    }

    fn edge(&self, a: usize, b: usize) -> bool {
        self.df[a][b] > 0
    }

    fn reachability(&self) -> Vec<Vec<bool>> {
        let n = self.n();
        (0..n)
            .map(|s| {
                let mut seen = vec![false; n];
                let mut stack: Vec<usize> = (0..n).filter(|&b| self.edge(s, b)).collect();
                while let Some(x) = stack.pop() {
                    if !std::mem::replace(&mut seen[x], true) {
                        stack.extend((0..n).filter(|&b| self.edge(x, b) && !seen[b]));
                    }
                }
                seen
            })
            .collect()
    }

    /// Convert groups of local indices into sorted activity-id sets.
    fn to_parts(&self, groups: Vec<Vec<usize>>) -> Vec<BTreeSet<u32>> {
        groups.into_iter().map(|g| g.into_iter().map(|i| self.acts[i]).collect()).collect()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }

    /// Groups ordered by smallest member.
    fn groups(&mut self) -> Vec<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.0.len() {
            let r = self.find(i);
            by_root.entry(r).or_default().push(i);
        }
        let mut g: Vec<Vec<usize>> = by_root.into_values().collect();
        g.sort_by_key(|v| v[0]);
        g
    }
}

enum Cut {
    Xor(Vec<BTreeSet<u32>>),
    Sequence(Vec<BTreeSet<u32>>),
    Parallel(Vec<BTreeSet<u32>>),
    Loop(Vec<BTreeSet<u32>>),
}

fn xor_cut(g: &Graph) -> Option<Cut> {
    let mut uf = UnionFind::new(g.n());
    for a in 0..g.n() {
        for b in 0..g.n() {
            if g.edge(a, b) {
                uf.union(a, b);
            }
        }
    }
    let groups = uf.groups();
    (groups.len() > 1).then(|| Cut::Xor(g.to_parts(groups)))
}

fn sequence_cut(g: &Graph) -> Option<Cut> {
    let n = g.n();
    let r = g.reachability();
    let mut uf = UnionFind::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if r[a][b] == r[b][a] {
                uf.union(a, b);
            }
        }
    }
    let mut groups = uf.groups();
    if groups.len() < 2 {
        return None;
    }
    let reaches = |p: &[usize], q: &[usize]| p.iter().any(|&a| q.iter().any(|&b| r[a][b]));
    let preds: Vec<usize> = groups
        .iter()
        .map(|q| groups.iter().filter(|p| !std::ptr::eq(*p, q) && reaches(p, q)).count())
        .collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by_key(|&i| (preds[i], groups[i][0]));
    groups = order.into_iter().map(|i| groups[i].clone()).collect();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            for &a in &groups[i] {
                for &b in &groups[j] {
                    if !r[a][b] || r[b][a] {
                        return None;
                    }
                }
            }
        }
    }
    Some(Cut::Sequence(g.to_parts(groups)))
}

fn parallel_cut(g: &Graph) -> Option<Cut> {
    let n = g.n();
    let mut uf = UnionFind::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if !(g.edge(a, b) && g.edge(b, a)) {
                uf.union(a, b);
            }
        }
    }
    let groups = uf.groups();
    if groups.len() < 2 {
        return None;
    }
    let complete = |grp: &[usize]| grp.iter().any(|&a| g.start[a] > 0) && grp.iter().any(|&a| g.end[a] > 0);
    let (mut good, bad): (Vec<Vec<usize>>, Vec<Vec<usize>>) = groups.into_iter().partition(|grp| complete(grp));
    if good.is_empty() {
        return None;
    }
    for grp in bad {
        good[0].extend(grp);
    }
    if good.len() < 2 {
        return None;
    }
    for grp in &mut good {
        grp.sort_unstable();
    }
    good.sort_by_key(|v| v[0]);
    Some(Cut::Parallel(g.to_parts(good)))
}

fn loop_cut(g: &Graph) -> Option<Cut> {
    let n = g.n();
    let is_start = |a: usize| g.start[a] > 0;
    let is_end = |a: usize| g.end[a] > 0;
    let mut body: Vec<bool> = (0..n).map(|a| is_start(a) || is_end(a)).collect();
    if !body.iter().any(|&b| b) {
        return None;
    }
    loop {
        let mut uf = UnionFind::new(n);
        for a in 0..n {
            for b in 0..n {
                if !body[a] && !body[b] && g.edge(a, b) {
                    uf.union(a, b);
                }
            }
        }
        let comps: Vec<Vec<usize>> = uf.groups().into_iter().filter(|c| !body[c[0]]).collect();
        let starts: Vec<usize> = (0..n).filter(|&a| is_start(a)).collect();
        let ends: Vec<usize> = (0..n).filter(|&a| is_end(a)).collect();
        let mut changed = false;
        for c in &comps {
            let bad = c.iter().any(|&x| {
                (0..n).any(|a| body[a] && !is_end(a) && g.edge(a, x))
                    || (0..n).any(|a| body[a] && !is_start(a) && g.edge(x, a))
                    || (starts.iter().any(|&s| g.edge(x, s)) && !starts.iter().all(|&s| g.edge(x, s)))
                    || (ends.iter().any(|&e| g.edge(e, x)) && !ends.iter().all(|&e| g.edge(e, x)))
            });
            if bad {
                c.iter().for_each(|&x| body[x] = true);
                changed = true;
            }
        }
        if !changed {
            if comps.is_empty() {
                return None;
            }
            let mut parts = vec![(0..n).filter(|&a| body[a]).collect::<Vec<_>>()];
            parts.extend(comps);
            return Some(Cut::Loop(g.to_parts(parts)));
        }
    }
}

fn part_of(parts: &[BTreeSet<u32>], a: u32) -> usize {
    parts.iter().position(|p| p.contains(&a)).expect("activity in some part")
}

fn add(log: &mut SubLog, t: Trace, c: u64) {
    *log.entry(t).or_default() += c;
}

fn split_xor(log: &SubLog, parts: &[BTreeSet<u32>]) -> Vec<SubLog> {
    let mut out = vec![SubLog::new(); parts.len()];
    for (t, &c) in log {
        let mut counts = vec![0usize; parts.len()];
        for &a in t {
            counts[part_of(parts, a)] += 1;
        }
        let best = (0..parts.len()).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap_or(0);
        add(&mut out[best], t.iter().copied().filter(|a| parts[best].contains(a)).collect(), c);
    }
    out
}

fn split_sequence(log: &SubLog, parts: &[BTreeSet<u32>]) -> Vec<SubLog> {
    let mut out = vec![SubLog::new(); parts.len()];
    for (t, &c) in log {
        let mut cur = 0;
        for (i, p) in parts.iter().enumerate() {
            let end = if i + 1 == parts.len() {
                t.len()
            } else {
                // split point minimising events placed in the wrong part
                let mut best = (usize::MAX, cur);
                for s in cur..=t.len() {
                    let cost = t[cur..s].iter().filter(|a| !p.contains(a)).count()
                        + t[s..].iter().filter(|a| p.contains(a)).count();
                    if cost < best.0 {
                        best = (cost, s);
                    }
                }
                best.1
            };
            add(&mut out[i], t[cur..end].iter().copied().filter(|a| p.contains(a)).collect(), c);
            cur = end;
        }
    }
    out
}

fn split_parallel(log: &SubLog, parts: &[BTreeSet<u32>]) -> Vec<SubLog> {
    let mut out = vec![SubLog::new(); parts.len()];
    for (t, &c) in log {
        for (i, p) in parts.iter().enumerate() {
            add(&mut out[i], t.iter().copied().filter(|a| p.contains(a)).collect(), c);
        }
    }
    out
}

fn split_loop(log: &SubLog, parts: &[BTreeSet<u32>]) -> Vec<SubLog> {
    let mut out = vec![SubLog::new(); parts.len()];
    for (t, &c) in log {
        let mut current = 0;
        let mut seg = Vec::new();
        for &a in t {
            let p = part_of(parts, a);
            if p != current {
                add(&mut out[current], std::mem::take(&mut seg), c);
                if current != 0 && p != 0 {
                    add(&mut out[0], Vec::new(), c);
                }
                current = p;
            }
            seg.push(a);
        }
        add(&mut out[current], seg, c);
        if current != 0 {
            add(&mut out[0], Vec::new(), c);
        }
    }
    out
}

impl Miner<'_> {
    fn leaf(&self, a: u32) -> ProcessTree {
        ProcessTree::activity(self.names[a as usize].clone())
    }

    fn mine(&self, log: &SubLog) -> ProcessTree {
        let total: u64 = log.values().sum();
        let empties = log.get(&Vec::new()).copied().unwrap_or(0);
        if empties == total {
            return ProcessTree::Silent;
        }
        if empties > 0 {
            let mut rest = log.clone();
            rest.remove(&Vec::new());
            if (empties as f64) < self.noise * total as f64 {
                return self.mine(&rest);
            }
            return ProcessTree::xor(vec![ProcessTree::Silent, self.mine(&rest)]);
        }
        if log.len() == 1 {
            let t = log.keys().next().expect("one variant");
            if t.len() == 1 {
                return self.leaf(t[0]);
            }
        }
        let g = Graph::new(log, self.noise);
        let cut = xor_cut(&g)
            .or_else(|| sequence_cut(&g))
            .or_else(|| parallel_cut(&g))
            .or_else(|| loop_cut(&g));
        match cut {
            Some(Cut::Xor(parts)) => {
                ProcessTree::xor(split_xor(log, &parts).iter().map(|l| self.mine(l)).collect())
            }
            Some(Cut::Sequence(parts)) => {
                ProcessTree::seq(split_sequence(log, &parts).iter().map(|l| self.mine(l)).collect())
            }
            Some(Cut::Parallel(parts)) => {
                ProcessTree::par(split_parallel(log, &parts).iter().map(|l| self.mine(l)).collect())
            }
            Some(Cut::Loop(parts)) => {
                let subs = split_loop(log, &parts);
                let body = self.mine(&subs[0]);
                let redos: Vec<ProcessTree> = subs[1..].iter().map(|l| self.mine(l)).collect();
                let redo = if redos.len() == 1 {
                    redos.into_iter().next().expect("one redo")
                } else {
                    ProcessTree::xor(redos)
                };
                ProcessTree::looped(body, redo)
            }
            None => self.fall_through(log, &g),
        }
    }

    fn fall_through(&self, log: &SubLog, g: &Graph) -> ProcessTree {
        // an activity occurring exactly once in every trace runs in parallel with the rest
        if g.n() > 1 {
            for &a in &g.acts {
                if log.keys().all(|t| t.iter().filter(|&&x| x == a).count() == 1) {
                    let mut rest = SubLog::new();
                    for (t, &c) in log {
                        add(&mut rest, t.iter().copied().filter(|&x| x != a).collect(), c);
                    }
                    return ProcessTree::par(vec![self.leaf(a), self.mine(&rest)]);
                }
            }
        }
        let pos = |a: u32| g.acts.binary_search(&a).expect("activity present");
        let traces: u64 = log.values().sum();
        // strict tau loop: cut where an end activity is followed by a start activity
        let strict = self.split_traces(log, |prev, next| g.end[pos(prev)] > 0 && g.start[pos(next)] > 0);
        if strict.values().sum::<u64>() > traces {
            return ProcessTree::looped(self.mine(&strict), ProcessTree::Silent);
        }
        let tau = self.split_traces(log, |_, next| g.start[pos(next)] > 0);
        if tau.values().sum::<u64>() > traces {
            return ProcessTree::looped(self.mine(&tau), ProcessTree::Silent);
        }
        let leaves: Vec<ProcessTree> = g.acts.iter().map(|&a| self.leaf(a)).collect();
        let body = if leaves.len() == 1 {
            leaves.into_iter().next().expect("one leaf")
        } else {
            ProcessTree::xor(leaves)
        };
        ProcessTree::looped(body, ProcessTree::Silent)
    }

    fn split_traces(&self, log: &SubLog, cut_before: impl Fn(u32, u32) -> bool) -> SubLog {
        let mut out = SubLog::new();
        for (t, &c) in log {
            let mut seg = vec![t[0]];
            for w in t.windows(2) {
                if cut_before(w[0], w[1]) {
                    add(&mut out, std::mem::take(&mut seg), c);
                }
                seg.push(w[1]);
            }
            add(&mut out, seg, c);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mine(traces: &[&[&str]]) -> ProcessTree {
        let seqs: Vec<Vec<String>> = traces.iter().map(|t| t.iter().map(|s| s.to_string()).collect()).collect();
        discover_tree_from_sequences(&seqs, 0.0).unwrap()
    }

    #[test]
    fn single_variant_sequence() {
        let traces: Vec<&[&str]> = vec![&["A", "B", "C"]; 10];
        assert_eq!(mine(&traces), ProcessTree::seq_of(&["A", "B", "C"]));
    }

    #[test]
    fn two_orders_are_parallel() {
        let t = mine(&[&["A", "B"], &["B", "A"]]);
        assert_eq!(t, ProcessTree::par(vec![ProcessTree::activity("A"), ProcessTree::activity("B")]));
    }

    #[test]
    fn choice_and_optional() {
        assert_eq!(mine(&[&["A"], &["B"]]).to_string(), "X(A, B)");
        assert_eq!(mine(&[&["A", "B"], &["B"]]).to_string(), "->(X(τ, A), B)");
    }

    #[test]
    fn repetition_becomes_loop() {
        assert_eq!(mine(&[&["A", "B", "A"], &["A"]]).to_string(), "*(A, B)");
        assert_eq!(mine(&[&["A", "A"]]).to_string(), "*(A, τ)");
    }

    #[test]
    fn rejects_bad_threshold() {
        assert!(discover_tree_from_sequences(&[], 1.0).is_err());
        assert_eq!(discover_tree_from_sequences(&[], 0.0).unwrap(), ProcessTree::Silent);
    }
}
