//! Directly-follows graphs, process trees, their execution semantics, and
//! dotted-chart extraction.

pub mod dfg;
pub mod dotted;
pub mod inductive;
pub mod semantics;
pub mod tree;

pub use dfg::{discover_dfg, trace_steps, ArcStats, Dfg, Node, TraceStep};
pub use dotted::{dotted_chart, DottedChart, DottedPoint, DottedSort};
pub use inductive::{discover_tree, discover_tree_from_sequences};
pub use semantics::{accepted_words, tree_to_lts, Label, Lts, Marking, TransitionSystem, TreeNet};
pub use tree::ProcessTree;
