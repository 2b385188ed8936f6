//! Execution semantics of process trees.
//!
//! A tree compiles to a 1-safe workflow net whose places are shared between
//! sequence neighbours and exclusive-choice siblings; parallel and loop
//! operators get silent entry/exit transitions. [`TreeNet`] explores that net
//! lazily, [`Lts`] is the explicit reachability graph.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::hash::Hash;

use super::tree::ProcessTree;
use crate::error::{Error, Result};

/// Label id into [`TransitionSystem::alphabet`]; `None` is a silent step.
pub type Label = Option<u32>;

/// Anything with an initial state, final states, and labelled steps.
pub trait TransitionSystem {
    type State: Clone + Eq + Hash;

    fn alphabet(&self) -> &[String];
    fn initial(&self) -> Self::State;
    fn is_final(&self, state: &Self::State) -> bool;
    fn successors(&self, state: &Self::State) -> Vec<(Label, Self::State)>;

    fn label_id(&self, activity: &str) -> Option<u32> {
        self.alphabet().iter().position(|a| a == activity).map(|i| i as u32)
    }

    /// Number of visible steps on the shortest run to a final state, `None`
    /// when no final state is reachable.
    fn shortest_run(&self) -> Option<usize> {
        let mut dist: HashMap<Self::State, usize> = HashMap::new();
        let mut queue = VecDeque::from([(self.initial(), 0usize)]);
        while let Some((s, d)) = queue.pop_front() {
            if dist.get(&s).is_some_and(|&old| old <= d) {
                continue;
            }
            dist.insert(s.clone(), d);
            if self.is_final(&s) {
                return Some(d);
            }
            for (label, next) in self.successors(&s) {
                match label {
                    None => queue.push_front((next, d)),
                    Some(_) => queue.push_back((next, d + 1)),
                }
            }
        }
        None
    }
}

/// Set of marked places.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(Box<[u64]>);

impl Marking {
    fn empty(places: usize) -> Self {
        Marking(vec![0; places.div_ceil(64).max(1)].into_boxed_slice())
    }

    fn with(mut self, place: usize) -> Self {
        self.0[place / 64] |= 1 << (place % 64);
        self
    }

    fn covers(&self, other: &Marking) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(m, p)| m & p == *p)
    }

    fn fire(&self, pre: &Marking, post: &Marking) -> Marking {
        Marking(
            self.0
                .iter()
                .zip(pre.0.iter().zip(post.0.iter()))
                .map(|(m, (p, q))| (m & !p) | q)
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
struct NetTransition {
    label: Label,
    pre: Marking,
    post: Marking,
}

/// Workflow net of a process tree, explored on demand.
#[derive(Debug, Clone)]
pub struct TreeNet {
    alphabet: Vec<String>,
    transitions: Vec<NetTransition>,
    initial: Marking,
    final_marking: Marking,
    shortest: usize,
}

struct NetBuilder {
    alphabet: Vec<String>,
    ids: HashMap<String, u32>,
    places: usize,
    arcs: Vec<(Label, Vec<usize>, Vec<usize>)>,
}

impl NetBuilder {
    fn place(&mut self) -> usize {
        self.places += 1;
        self.places - 1
    }

    fn label(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.alphabet.len() as u32;
        self.alphabet.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    fn build(&mut self, t: &ProcessTree, input: usize, output: usize) {
        match t {
            ProcessTree::Activity { label } => {
                let l = self.label(label);
                self.arcs.push((Some(l), vec![input], vec![output]));
            }
            ProcessTree::Silent => self.arcs.push((None, vec![input], vec![output])),
            ProcessTree::Sequence { children } => {
                let mut from = input;
                for (i, c) in children.iter().enumerate() {
                    let to = if i + 1 == children.len() { output } else { self.place() };
                    self.build(c, from, to);
                    from = to;
                }
            }
            ProcessTree::Xor { children } => {
                for c in children {
                    self.build(c, input, output);
                }
            }
            ProcessTree::Parallel { children } => {
                let ins: Vec<usize> = children.iter().map(|_| self.place()).collect();
                let outs: Vec<usize> = children.iter().map(|_| self.place()).collect();
                self.arcs.push((None, vec![input], ins.clone()));
                for (c, (&i, &o)) in children.iter().zip(ins.iter().zip(&outs)) {
                    self.build(c, i, o);
                }
                self.arcs.push((None, outs, vec![output]));
            }
            ProcessTree::Loop { children } => {
                let (body_in, body_out) = (self.place(), self.place());
                self.arcs.push((None, vec![input], vec![body_in]));
                self.build(&children[0], body_in, body_out);
                for redo in &children[1..] {
                    self.build(redo, body_out, body_in);
                }
                self.arcs.push((None, vec![body_out], vec![output]));
            }
        }
    }
}

impl TreeNet {
    pub fn new(tree: &ProcessTree) -> Result<Self> {
        tree.validate()?;
        let mut b = NetBuilder {
            alphabet: Vec::new(),
            ids: HashMap::new(),
            places: 2,
            arcs: Vec::new(),
        };
        // register labels in sorted order so ids are independent of tree shape
        for a in tree.activities() {
            b.label(&a);
        }
        b.build(tree, 0, 1);
        let places = b.places;
        let mk = |ps: &[usize]| ps.iter().fold(Marking::empty(places), |m, &p| m.with(p));
        let transitions = b
            .arcs
            .iter()
            .map(|(label, pre, post)| NetTransition {
                label: *label,
                pre: mk(pre),
                post: mk(post),
            })
            .collect();
        Ok(TreeNet {
            alphabet: b.alphabet,
            transitions,
            initial: mk(&[0]),
            final_marking: mk(&[1]),
            shortest: min_visible_len(tree),
        })
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }
}

fn min_visible_len(t: &ProcessTree) -> usize {
    match t {
        ProcessTree::Activity { .. } => 1,
        ProcessTree::Silent => 0,
        ProcessTree::Sequence { children } | ProcessTree::Parallel { children } => {
            children.iter().map(min_visible_len).sum()
        }
        ProcessTree::Xor { children } => children.iter().map(min_visible_len).min().unwrap_or(0),
        ProcessTree::Loop { children } => min_visible_len(&children[0]),
    }
}

impl TransitionSystem for TreeNet {
    type State = Marking;

    fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    fn initial(&self) -> Marking {
        self.initial.clone()
    }

    fn is_final(&self, m: &Marking) -> bool {
        *m == self.final_marking
    }

    fn successors(&self, m: &Marking) -> Vec<(Label, Marking)> {
        self.transitions
            .iter()
            .filter(|t| m.covers(&t.pre))
            .map(|t| (t.label, m.fire(&t.pre, &t.post)))
            .collect()
    }

    fn shortest_run(&self) -> Option<usize> {
        Some(self.shortest)
    }
}

/// Explicit labelled transition system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lts {
    pub alphabet: Vec<String>,
    pub initial: usize,
    pub finals: BTreeSet<usize>,
    /// Outgoing transitions per state.
    pub transitions: Vec<Vec<(Label, usize)>>,
}

impl Lts {
    pub fn new(states: usize, initial: usize) -> Self {
        Lts {
            alphabet: Vec::new(),
            initial,
            finals: BTreeSet::new(),
            transitions: vec![Vec::new(); states],
        }
    }

    pub fn state_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    pub fn add_final(&mut self, s: usize) {
        self.finals.insert(s);
    }

    pub fn add_transition(&mut self, from: usize, label: Option<&str>, to: usize) {
        let l = label.map(|name| match self.alphabet.iter().position(|a| a == name) {
            Some(i) => i as u32,
            None => {
                self.alphabet.push(name.to_string());
                (self.alphabet.len() - 1) as u32
            }
        });
        self.transitions[from].push((l, to));
    }

    /// Materialise the reachable part of a transition system.
    pub fn from_system<T: TransitionSystem>(ts: &T, max_states: usize) -> Result<Lts> {
        let mut index: HashMap<T::State, usize> = HashMap::new();
        let mut states = vec![ts.initial()];
        index.insert(ts.initial(), 0);
        let mut queue = VecDeque::from([0usize]);
        let mut transitions: Vec<Vec<(Label, usize)>> = vec![Vec::new()];
        let mut finals = BTreeSet::new();
        while let Some(i) = queue.pop_front() {
            let s = states[i].clone();
            if ts.is_final(&s) {
                finals.insert(i);
            }
            for (label, next) in ts.successors(&s) {
                let j = match index.get(&next) {
                    Some(&j) => j,
                    None => {
                        if states.len() >= max_states {
                            return Err(Error::Parameter(format!(
                                "state space exceeds {max_states} states"
                            )));
                        }
                        let j = states.len();
                        index.insert(next.clone(), j);
                        states.push(next);
                        transitions.push(Vec::new());
                        queue.push_back(j);
                        j
                    }
                };
                transitions[i].push((label, j));
            }
        }
        Ok(Lts {
            alphabet: ts.alphabet().to_vec(),
            initial: 0,
            finals,
            transitions,
        })
    }

    /// True when some final state is reachable from the initial state.
    pub fn has_reachable_final(&self) -> bool {
        let mut seen = vec![false; self.state_count()];
        let mut stack = vec![self.initial];
        while let Some(s) = stack.pop() {
            if std::mem::replace(&mut seen[s], true) {
                continue;
            }
            if self.finals.contains(&s) {
                return true;
            }
            stack.extend(self.transitions[s].iter().map(|(_, t)| *t));
        }
        false
    }
}

impl TransitionSystem for Lts {
    type State = usize;

    fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    fn initial(&self) -> usize {
        self.initial
    }

    fn is_final(&self, s: &usize) -> bool {
        self.finals.contains(s)
    }

    fn successors(&self, s: &usize) -> Vec<(Label, usize)> {
        self.transitions[*s].clone()
    }
}

/// Default bound on explicit state spaces.
pub const MAX_LTS_STATES: usize = 2_000_000;

/// Reachability graph of the tree's workflow net.
pub fn tree_to_lts(tree: &ProcessTree) -> Result<Lts> {
    Lts::from_system(&TreeNet::new(tree)?, MAX_LTS_STATES)
}

/// Visible words of length at most `max_len` accepted by a transition system.
pub fn accepted_words<T: TransitionSystem>(ts: &T, max_len: usize) -> BTreeSet<Vec<String>> {
    let mut seen: std::collections::HashSet<(T::State, Vec<u32>)> = Default::default();
    let mut stack = vec![(ts.initial(), Vec::new())];
    let mut words = BTreeSet::new();
    while let Some((s, w)) = stack.pop() {
        if !seen.insert((s.clone(), w.clone())) {
            continue;
        }
        if ts.is_final(&s) {
            words.insert(w.iter().map(|&l| ts.alphabet()[l as usize].clone()).collect());
        }
        for (label, next) in ts.successors(&s) {
            match label {
                None => stack.push((next, w.clone())),
                Some(l) if w.len() < max_len => {
                    let mut w2 = w.clone();
                    w2.push(l);
                    stack.push((next, w2));
                }
                Some(_) => {}
            }
        }
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(t: &ProcessTree, n: usize) -> BTreeSet<Vec<String>> {
        accepted_words(&tree_to_lts(t).unwrap(), n)
    }

    fn w(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn leaf_is_two_states() {
        let lts = tree_to_lts(&ProcessTree::activity("A")).unwrap();
        assert_eq!(lts.state_count(), 2);
        assert_eq!(lts.transition_count(), 1);
        assert!(lts.has_reachable_final());
    }

    #[test]
    fn choice_language() {
        let t = ProcessTree::xor(vec![ProcessTree::activity("A"), ProcessTree::activity("B")]);
        assert_eq!(words(&t, 4), [w(&["A"]), w(&["B"])].into_iter().collect());
    }

    #[test]
    fn parallel_three_is_all_permutations() {
        let t = ProcessTree::par(vec![
            ProcessTree::activity("A"),
            ProcessTree::activity("B"),
            ProcessTree::activity("C"),
        ]);
        let got = words(&t, 3);
        assert_eq!(got.len(), 6);
        assert!(got.iter().all(|x| x.len() == 3));
    }

    #[test]
    fn loop_language_prefix() {
        let t = ProcessTree::looped(ProcessTree::activity("A"), ProcessTree::activity("B"));
        let got = words(&t, 5);
        assert_eq!(got, [w(&["A"]), w(&["A", "B", "A"]), w(&["A", "B", "A", "B", "A"])].into_iter().collect());
    }

    #[test]
    fn silent_loop_terminates() {
        let t = ProcessTree::looped(ProcessTree::Silent, ProcessTree::Silent);
        assert_eq!(words(&t, 3), [Vec::<String>::new()].into_iter().collect());
    }
}
