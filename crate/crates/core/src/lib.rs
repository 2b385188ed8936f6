//! Process mining for production lines.
//!
//! The crate bundles a discrete-event generator for an assembly line with the
//! analyses usually run on such logs: discovery, alignment-based conformance,
//! station performance, process cubes, sojourn-time drift detection, log
//! comparison, object-centric flattening and system-dynamics what-if
//! simulation.

pub mod cli;
pub mod comparison;
pub mod conformance;
pub mod cube;
pub mod discovery;
pub mod drift;
pub mod error;
pub mod event_model;
pub mod ocpm;
pub mod performance;
pub mod sd;
pub mod simulator;
pub mod time;

pub use error::{Error, Result};
