use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::dfg::dot_id;
use crate::error::{Error, Result};

/// Block-structured process model.
///
/// `Loop` children are the do-part followed by one or more redo-parts; with
/// several redo-parts one of them is chosen per iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ProcessTree {
    Activity { label: String },
    Silent,
    Sequence { children: Vec<ProcessTree> },
    Xor { children: Vec<ProcessTree> },
    Parallel { children: Vec<ProcessTree> },
    Loop { children: Vec<ProcessTree> },
}

impl ProcessTree {
    pub fn activity(label: impl Into<String>) -> Self {
        ProcessTree::Activity { label: label.into() }
    }

    pub fn seq(children: Vec<ProcessTree>) -> Self {
        ProcessTree::Sequence { children }
    }

    pub fn xor(children: Vec<ProcessTree>) -> Self {
        ProcessTree::Xor { children }
    }

    pub fn par(children: Vec<ProcessTree>) -> Self {
        ProcessTree::Parallel { children }
    }

    pub fn looped(body: ProcessTree, redo: ProcessTree) -> Self {
        ProcessTree::Loop {
            children: vec![body, redo],
        }
    }

    /// Sequence of activity leaves.
    pub fn seq_of(labels: &[&str]) -> Self {
        Self::seq(labels.iter().map(|l| Self::activity(*l)).collect())
    }

    pub fn children(&self) -> &[ProcessTree] {
        match self {
            ProcessTree::Sequence { children }
            | ProcessTree::Xor { children }
            | ProcessTree::Parallel { children }
            | ProcessTree::Loop { children } => children,
            _ => &[],
        }
    }

    pub fn operator_name(&self) -> &'static str {
        match self {
            ProcessTree::Activity { .. } => "activity",
            ProcessTree::Silent => "tau",
            ProcessTree::Sequence { .. } => "sequence",
            ProcessTree::Xor { .. } => "xor",
            ProcessTree::Parallel { .. } => "parallel",
            ProcessTree::Loop { .. } => "loop",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let kids = self.children();
        if !matches!(self, ProcessTree::Activity { .. } | ProcessTree::Silent) && kids.len() < 2 {
            return Err(Error::Invariant(format!(
                "{} node needs at least two children",
                self.operator_name()
            )));
        }
        kids.iter().try_for_each(ProcessTree::validate)
    }

    pub fn activities(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_activities(&mut out);
        out
    }

    fn collect_activities(&self, out: &mut BTreeSet<String>) {
        if let ProcessTree::Activity { label } = self {
            out.insert(label.clone());
        }
        for c in self.children() {
            c.collect_activities(out);
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(ProcessTree::node_count).sum::<usize>()
    }

    /// Path of child indices from the root to the leaf with `label`.
    pub fn path_to(&self, label: &str) -> Option<Vec<usize>> {
        match self {
            ProcessTree::Activity { label: l } if l == label => Some(Vec::new()),
            _ => self.children().iter().enumerate().find_map(|(i, c)| {
                c.path_to(label).map(|mut p| {
                    p.insert(0, i);
                    p
                })
            }),
        }
    }

    /// Lowest common ancestor of two leaves, with the child indices under
    /// which each leaf sits.
    pub fn lowest_common_ancestor(&self, a: &str, b: &str) -> Option<(&ProcessTree, usize, usize)> {
        let pa = self.path_to(a)?;
        let pb = self.path_to(b)?;
        let common = pa.iter().zip(&pb).take_while(|(x, y)| x == y).count();
        if common == pa.len() || common == pb.len() {
            return None;
        }
        let mut node = self;
        for &i in &pa[..common] {
            node = &node.children()[i];
        }
        Some((node, pa[common], pb[common]))
    }

    /// Merge nested operators of the same kind (sequence in sequence, ...).
    pub fn flattened(self) -> ProcessTree {
        fn merge(kind: fn(&ProcessTree) -> bool, children: Vec<ProcessTree>) -> Vec<ProcessTree> {
            let mut out = Vec::new();
            for c in children.into_iter().map(ProcessTree::flattened) {
                if kind(&c) {
                    out.extend(c.children().to_vec());
                } else {
                    out.push(c);
                }
            }
            out
        }
        match self {
            ProcessTree::Sequence { children } => ProcessTree::Sequence {
                children: merge(|t| matches!(t, ProcessTree::Sequence { .. }), children),
            },
            ProcessTree::Xor { children } => ProcessTree::Xor {
                children: merge(|t| matches!(t, ProcessTree::Xor { .. }), children),
            },
            ProcessTree::Parallel { children } => ProcessTree::Parallel {
                children: merge(|t| matches!(t, ProcessTree::Parallel { .. }), children),
            },
            ProcessTree::Loop { children } => ProcessTree::Loop {
                children: children.into_iter().map(ProcessTree::flattened).collect(),
            },
            leaf => leaf,
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph tree {\n");
        let mut counter = 0;
        self.dot_node(&mut s, &mut counter);
        s.push_str("}\n");
        s
    }

    fn dot_node(&self, s: &mut String, counter: &mut usize) -> usize {
        let id = *counter;
        *counter += 1;
        let (label, shape) = match self {
            ProcessTree::Activity { label } => (label.clone(), "box"),
            ProcessTree::Silent => ("τ".to_string(), "box"),
            ProcessTree::Sequence { .. } => ("→".to_string(), "circle"),
            ProcessTree::Xor { .. } => ("×".to_string(), "circle"),
            ProcessTree::Parallel { .. } => ("∧".to_string(), "circle"),
            ProcessTree::Loop { .. } => ("↺".to_string(), "circle"),
        };
        let _ = writeln!(s, "  n{id} [label={}, shape={shape}];", dot_id(&label));
        for c in self.children() {
            let cid = c.dot_node(s, counter);
            let _ = writeln!(s, "  n{id} -> n{cid};");
        }
        id
    }
}

impl fmt::Display for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessTree::Activity { label } => f.write_str(label),
            ProcessTree::Silent => f.write_str("τ"),
            _ => {
                let op = match self {
                    ProcessTree::Sequence { .. } => "->",
                    ProcessTree::Xor { .. } => "X",
                    ProcessTree::Parallel { .. } => "+",
                    _ => "*",
                };
                write!(f, "{op}(")?;
                for (i, c) in self.children().iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}
