use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::event_model::{Event, Lifecycle, TraceLog};

/// DFG node: an activity or one of the artificial start/end nodes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Node {
    Start,
    Activity(String),
    End,
}

impl Node {
    pub fn activity(label: impl Into<String>) -> Node {
        Node::Activity(label.into())
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Start => f.write_str("▶"),
            Node::End => f.write_str("■"),
            Node::Activity(a) => f.write_str(a),
        }
    }
}

/// Frequency and accumulated gap of one directly-follows arc.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcStats {
    pub frequency: u64,
    /// Sum of gaps in milliseconds.
    pub total_gap_ms: i64,
}

impl ArcStats {
    /// Mean gap in seconds.
    pub fn mean_duration(&self) -> f64 {
        if self.frequency == 0 {
            0.0
        } else {
            self.total_gap_ms as f64 / self.frequency as f64 / 1000.0
        }
    }
}

/// Directly-follows graph annotated with frequencies and mean durations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dfg {
    pub arcs: BTreeMap<(Node, Node), ArcStats>,
}

impl Dfg {
    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn nodes(&self) -> BTreeSet<Node> {
        self.arcs.keys().flat_map(|(a, b)| [a.clone(), b.clone()]).collect()
    }

    pub fn activities(&self) -> BTreeSet<String> {
        self.nodes()
            .into_iter()
            .filter_map(|n| match n {
                Node::Activity(a) => Some(a),
                _ => None,
            })
            .collect()
    }

    pub fn arc(&self, from: &Node, to: &Node) -> Option<&ArcStats> {
        self.arcs.get(&(from.clone(), to.clone()))
    }

    pub fn frequency(&self, from: &str, to: &str) -> u64 {
        self.arc(&Node::activity(from), &Node::activity(to)).map_or(0, |s| s.frequency)
    }

    pub fn total_frequency(&self) -> u64 {
        self.arcs.values().map(|s| s.frequency).sum()
    }

    fn add(&mut self, from: Node, to: Node, gap_ms: i64) {
        let s = self.arcs.entry((from, to)).or_default();
        s.frequency += 1;
        s.total_gap_ms += gap_ms;
    }

    /// Add one trace given as (activity, complete time, start time if known).
    pub fn add_trace(&mut self, steps: &[TraceStep<'_>]) {
        let Some(first) = steps.first() else {
            return;
        };
        self.add(Node::Start, Node::activity(first.activity), 0);
        for w in steps.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let gap = b.start.unwrap_or(b.complete) - a.complete;
            self.add(Node::activity(a.activity), Node::activity(b.activity), gap);
        }
        let last = steps.last().expect("non-empty");
        self.add(Node::activity(last.activity), Node::End, 0);
    }

    pub fn to_dot(&self) -> String {
        self.to_dot_named("dfg")
    }

    pub fn to_dot_named(&self, name: &str) -> String {
        let mut s = format!("digraph {} {{\n  rankdir=LR;\n", dot_id(name));
        for n in self.nodes() {
            let shape = match n {
                Node::Activity(_) => "box",
                _ => "circle",
            };
            let _ = writeln!(s, "  {} [label={}, shape={shape}];", dot_id(&node_key(&n)), dot_id(&n.to_string()));
        }
        for ((a, b), st) in &self.arcs {
            let _ = writeln!(
                s,
                "  {} -> {} [label=\"{} / {:.1}s\"];",
                dot_id(&node_key(a)),
                dot_id(&node_key(b)),
                st.frequency,
                st.mean_duration()
            );
        }
        s.push_str("}\n");
        s
    }
}

pub(crate) fn node_key(n: &Node) -> String {
    match n {
        Node::Start => "__start".into(),
        Node::End => "__end".into(),
        Node::Activity(a) => a.clone(),
    }
}

pub(crate) fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// One complete event of a trace with the start time of its execution, if paired.
#[derive(Debug, Clone, Copy)]
pub struct TraceStep<'a> {
    pub activity: &'a str,
    pub complete: i64,
    pub start: Option<i64>,
}

/// Complete events of a trace, each paired with the latest unmatched start of
/// the same activity.
pub fn trace_steps(events: &[Event]) -> Vec<TraceStep<'_>> {
    let mut open: BTreeMap<&str, Vec<i64>> = BTreeMap::new();
    let mut steps = Vec::new();
    for e in events {
        match e.lifecycle {
            Lifecycle::Start => open.entry(e.activity.as_str()).or_default().push(e.timestamp),
            Lifecycle::Complete => {
                let start = open.get_mut(e.activity.as_str()).and_then(|v| v.pop());
                steps.push(TraceStep {
                    activity: &e.activity,
                    complete: e.timestamp,
                    start,
                });
            }
        }
    }
    steps
}

/// Discover the directly-follows graph of a trace log.
///
/// Arc gaps are previous-complete to next-start when lifecycle pairs exist,
/// otherwise complete to complete.
pub fn discover_dfg(log: &TraceLog) -> Dfg {
    let mut dfg = Dfg::default();
    for events in log.traces.values() {
        dfg.add_trace(&trace_steps(events));
    }
    dfg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_model::{Event, TraceLog};
    use crate::time::MS_PER_DAY;

    fn log_of(traces: &[(&str, &[(&str, i64)])]) -> TraceLog {
        let mut map = BTreeMap::new();
        let mut n = 0;
        for (case, evs) in traces {
            let v: Vec<Event> = evs
                .iter()
                .map(|(a, t)| {
                    n += 1;
                    Event::new(format!("e{n}"), *a, *t).with_case(*case)
                })
                .collect();
            map.insert(case.to_string(), v);
        }
        TraceLog::from_traces(map)
    }

    #[test]
    fn invoice_payment_frequency_and_mean() {
        let gap = (2.45 * MS_PER_DAY as f64) as i64;
        let mut map = BTreeMap::new();
        for i in 0..500 {
            let case = format!("c{i}");
            map.insert(
                case.clone(),
                vec![
                    Event::new(format!("a{i}"), "send invoice", i * 1000).with_case(&case),
                    Event::new(format!("b{i}"), "make payment", i * 1000 + gap).with_case(&case),
                ],
            );
        }
        let dfg = discover_dfg(&TraceLog::from_traces(map));
        let arc = dfg.arc(&Node::activity("send invoice"), &Node::activity("make payment")).unwrap();
        assert_eq!(arc.frequency, 500);
        assert!((arc.mean_duration() / 86_400.0 - 2.45).abs() < 1e-9);
    }

    #[test]
    fn single_activity() {
        let dfg = discover_dfg(&log_of(&[("c", &[("A", 0)])]));
        let keys: Vec<_> = dfg.arcs.keys().cloned().collect();
        assert_eq!(keys, vec![(Node::Start, Node::activity("A")), (Node::activity("A"), Node::End)]);
    }

    #[test]
    fn empty_log_gives_empty_dfg() {
        assert!(discover_dfg(&TraceLog::default()).is_empty());
    }

    #[test]
    fn start_complete_pairs_use_idle_gap() {
        let mut map = BTreeMap::new();
        map.insert(
            "c".to_string(),
            vec![
                Event::new("1", "A", 0).with_lifecycle(Lifecycle::Start).with_case("c"),
                Event::new("2", "A", 10).with_case("c"),
                Event::new("3", "B", 25).with_lifecycle(Lifecycle::Start).with_case("c"),
                Event::new("4", "B", 100).with_case("c"),
            ],
        );
        let dfg = discover_dfg(&TraceLog::from_traces(map));
        assert_eq!(dfg.arc(&Node::activity("A"), &Node::activity("B")).unwrap().total_gap_ms, 15);
    }
}
