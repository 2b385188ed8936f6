//! Optimal alignments of traces against a model's transition system.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::discovery::dfg::dot_id;
use crate::discovery::TransitionSystem;
use crate::error::{Error, Result};
use crate::event_model::TraceLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Synchronous,
    LogMove,
    ModelMove,
    SilentModelMove,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activity: Option<String>,
}

impl Move {
    fn new(kind: MoveKind, activity: Option<&str>) -> Self {
        Move {
            kind,
            activity: activity.map(str::to_string),
        }
    }

    pub fn cost(&self) -> u32 {
        matches!(self.kind, MoveKind::LogMove | MoveKind::ModelMove) as u32
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub moves: Vec<Move>,
    pub cost: u32,
}

impl Alignment {
    /// Activities of the log side, in order.
    pub fn log_projection(&self) -> Vec<&str> {
        self.moves
            .iter()
            .filter(|m| matches!(m.kind, MoveKind::Synchronous | MoveKind::LogMove))
            .filter_map(|m| m.activity.as_deref())
            .collect()
    }

    /// Visible activities of the model side, in order.
    pub fn model_projection(&self) -> Vec<&str> {
        self.moves
            .iter()
            .filter(|m| matches!(m.kind, MoveKind::Synchronous | MoveKind::ModelMove))
            .filter_map(|m| m.activity.as_deref())
            .collect()
    }
}

struct SearchNode<S> {
    pos: usize,
    state: S,
    cost: u32,
    parent: Option<(usize, Move)>,
}

/// Minimal-cost alignment under unit costs.
///
/// Uniform-cost search over the product of the trace and the model. At each
/// expansion successors are generated synchronous first, then silent, model
/// (by activity) and log moves; among equal-cost paths the first one found
/// wins, which makes the result deterministic.
pub fn align_trace<T: TransitionSystem, S: AsRef<str>>(trace: &[S], model: &T) -> Result<Alignment> {
    if model.shortest_run().is_none() {
        return Err(Error::EmptyLanguage);
    }
    align_unchecked(trace, model)
}

fn align_unchecked<T: TransitionSystem, S: AsRef<str>>(trace: &[S], model: &T) -> Result<Alignment> {
    let labels: Vec<Option<u32>> = trace.iter().map(|a| model.label_id(a.as_ref())).collect();
    let alphabet = model.alphabet();
    let n = trace.len();

    let mut nodes: Vec<SearchNode<T::State>> = Vec::new();
    let mut index: HashMap<(usize, T::State), usize> = HashMap::new();
    let mut closed: Vec<bool> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;

    let start = model.initial();
    index.insert((0, start.clone()), 0);
    nodes.push(SearchNode {
        pos: 0,
        state: start,
        cost: 0,
        parent: None,
    });
    closed.push(false);
    heap.push(Reverse((0u32, seq, 0usize)));

    let goal = loop {
        let Some(Reverse((cost, _, i))) = heap.pop() else {
            return Err(Error::EmptyLanguage);
        };
        if closed[i] || cost > nodes[i].cost {
            continue;
        }
        closed[i] = true;
        let (pos, state) = (nodes[i].pos, nodes[i].state.clone());
        if pos == n && model.is_final(&state) {
            break i;
        }
        let succ = model.successors(&state);
        let mut moves: Vec<(usize, T::State, u32, Move)> = Vec::new();
        if pos < n {
            for (l, s2) in &succ {
                if l.is_some() && *l == labels[pos] {
                    moves.push((pos + 1, s2.clone(), 0, Move::new(MoveKind::Synchronous, Some(trace[pos].as_ref()))));
                }
            }
        }
        for (l, s2) in &succ {
            if l.is_none() {
                moves.push((pos, s2.clone(), 0, Move::new(MoveKind::SilentModelMove, None)));
            }
        }
        let mut model_moves: Vec<(&str, &T::State)> = succ
            .iter()
            .filter_map(|(l, s2)| l.map(|l| (alphabet[l as usize].as_str(), s2)))
            .collect();
        model_moves.sort_by(|a, b| a.0.cmp(b.0));
        for (a, s2) in model_moves {
            moves.push((pos, s2.clone(), 1, Move::new(MoveKind::ModelMove, Some(a))));
        }
        if pos < n {
            moves.push((pos + 1, state.clone(), 1, Move::new(MoveKind::LogMove, Some(trace[pos].as_ref()))));
        }
        for (p2, s2, c, mv) in moves {
            let new_cost = cost + c;
            let key = (p2, s2);
            let j = match index.get(&key) {
                Some(&j) => {
                    if closed[j] || nodes[j].cost <= new_cost {
                        continue;
                    }
                    nodes[j].cost = new_cost;
                    nodes[j].parent = Some((i, mv));
                    j
                }
                None => {
                    let j = nodes.len();
                    nodes.push(SearchNode {
                        pos: key.0,
                        state: key.1.clone(),
                        cost: new_cost,
                        parent: Some((i, mv)),
                    });
                    closed.push(false);
                    index.insert(key, j);
                    j
                }
            };
            seq += 1;
            heap.push(Reverse((new_cost, seq, j)));
        }
    };

    let cost = nodes[goal].cost;
    let mut moves = Vec::new();
    let mut cur = goal;
    while let Some((p, mv)) = nodes[cur].parent.take() {
        moves.push(mv);
        cur = p;
    }
    moves.reverse();
    Ok(Alignment { moves, cost })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityCounts {
    pub conforming: u64,
    pub model_moves: u64,
    pub log_moves: u64,
}

impl ActivityCounts {
    pub fn deviations(&self) -> u64 {
        self.model_moves + self.log_moves
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFitness {
    pub case_id: String,
    pub cost: u32,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub per_activity: BTreeMap<String, ActivityCounts>,
    pub traces: Vec<TraceFitness>,
    /// Mean trace fitness; absent for an empty log.
    pub fitness: Option<f64>,
}

impl ConformanceReport {
    pub fn model_moves(&self, activity: &str) -> u64 {
        self.per_activity.get(activity).map_or(0, |c| c.model_moves)
    }

    pub fn log_moves(&self, activity: &str) -> u64 {
        self.per_activity.get(activity).map_or(0, |c| c.log_moves)
    }

    pub fn total_cost(&self) -> u64 {
        self.traces.iter().map(|t| t.cost as u64).sum()
    }

    /// Activities as DOT nodes labelled with (model moves, log moves);
    /// deviating ones are drawn red.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph conformance {\n  node [shape=box, style=filled];\n");
        for (a, c) in &self.per_activity {
            let color = if c.deviations() > 0 { "#f4a6a6" } else { "#b9e4b0" };
            let label = format!("{a}\n({}, {})", c.model_moves, c.log_moves);
            let _ = writeln!(s, "  {} [label={}, fillcolor=\"{color}\"];", dot_id(a), dot_id(&label));
        }
        s.push_str("}\n");
        s
    }
}

/// Fitness of one alignment: 1 - cost / (|trace| + shortest accepted run).
pub fn trace_fitness(cost: u32, trace_len: usize, shortest_run: usize) -> f64 {
    let denom = trace_len + shortest_run;
    if denom == 0 {
        1.0
    } else {
        1.0 - cost as f64 / denom as f64
    }
}

/// Align every trace (identical variants once) and aggregate per activity.
pub fn check_log<T: TransitionSystem>(log: &TraceLog, model: &T) -> Result<ConformanceReport> {
    let shortest = model.shortest_run().ok_or(Error::EmptyLanguage)?;
    let mut cache: HashMap<Vec<String>, Alignment> = HashMap::new();
    let mut per_activity: BTreeMap<String, ActivityCounts> = BTreeMap::new();
    let mut traces = Vec::new();
    for (case, seq) in log.activity_sequences() {
        let alignment = match cache.get(&seq) {
            Some(a) => a.clone(),
            None => {
                let a = align_unchecked(&seq, model)?;
                cache.insert(seq.clone(), a.clone());
                a
            }
        };
        for m in &alignment.moves {
            let Some(act) = &m.activity else { continue };
            let c = per_activity.entry(act.clone()).or_default();
            match m.kind {
                MoveKind::Synchronous => c.conforming += 1,
                MoveKind::ModelMove => c.model_moves += 1,
                MoveKind::LogMove => c.log_moves += 1,
                MoveKind::SilentModelMove => {}
            }
        }
        traces.push(TraceFitness {
            case_id: case,
            cost: alignment.cost,
            fitness: trace_fitness(alignment.cost, seq.len(), shortest),
        });
    }
    let fitness = (!traces.is_empty()).then(|| traces.iter().map(|t| t.fitness).sum::<f64>() / traces.len() as f64);
    Ok(ConformanceReport {
        per_activity,
        traces,
        fitness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::{tree_to_lts, Lts, ProcessTree, TreeNet};

    #[test]
    fn fitting_trace_is_all_synchronous() {
        let net = TreeNet::new(&ProcessTree::seq_of(&["A", "B"])).unwrap();
        let a = align_trace(&["A", "B"], &net).unwrap();
        assert_eq!(a.cost, 0);
        assert!(a.moves.iter().all(|m| m.kind == MoveKind::Synchronous));
    }

    #[test]
    fn missing_sa7_is_one_model_move() {
        let lts = tree_to_lts(&ProcessTree::seq_of(&["SA6", "SA7", "SA8"])).unwrap();
        let a = align_trace(&["SA6", "SA8"], &lts).unwrap();
        assert_eq!(a.cost, 1);
        let dev: Vec<_> = a.moves.iter().filter(|m| m.cost() == 1).collect();
        assert_eq!(dev, vec![&Move::new(MoveKind::ModelMove, Some("SA7"))]);
    }

    #[test]
    fn extra_sa7_is_one_log_move() {
        let lts = tree_to_lts(&ProcessTree::seq_of(&["GA21", "GA22"])).unwrap();
        let a = align_trace(&["GA21", "SA7", "GA22"], &lts).unwrap();
        assert_eq!(a.cost, 1);
        assert_eq!(a.moves[1], Move::new(MoveKind::LogMove, Some("SA7")));
    }

    #[test]
    fn empty_language_is_an_error() {
        let mut lts = Lts::new(2, 0);
        lts.add_transition(0, Some("A"), 1);
        assert!(matches!(align_trace(&["A"], &lts), Err(Error::EmptyLanguage)));
    }

    #[test]
    fn fitness_normalisation() {
        assert_eq!(trace_fitness(0, 0, 0), 1.0);
        assert_eq!(trace_fitness(3, 0, 3), 0.0);
        assert!((trace_fitness(1, 2, 3) - 0.8).abs() < 1e-12);
    }
}
