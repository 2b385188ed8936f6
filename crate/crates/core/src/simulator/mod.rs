//! Stochastic assembly-line simulator producing case-centric and
//! object-centric event logs.
//!
//! The run is deterministic for a given configuration, seed and car count.
//! Random streams: release times, order sizes, and one stream per car with
//! its service, skip and operator draws in global station order followed by
//! its color and destination city.

pub mod config;
mod engine;
mod objects;

use crate::error::Result;
use crate::event_model::{AttrValue, Event, EventLog};
use crate::ocpm::ObjectCentricLog;
use crate::time::Boundary;

pub use config::{
    Arrival, BufferSpec, CarAttributes, CountRange, DeviationSpec, DriftSpec, Injection, LineConfig, LogNormal,
    ObjectLayerConfig, Operator, ReworkSpec, SaChain, Section, Trigger, Weighted,
};
pub use objects::car_id;

use crate::event_model::Lifecycle;

#[derive(Debug, Clone)]
pub struct SimOutput {
    /// Start and complete events of every station visit, case = car.
    pub log: EventLog,
    pub ocel: ObjectCentricLog,
}

/// Simulate `cars` cars. Events carry the car as case, the operator as
/// resource, and the car's `color` and `city`.
pub fn simulate(config: &LineConfig, seed: u64, cars: usize) -> Result<SimOutput> {
    let raw = engine::run(config, seed, cars)?;
    let clock = config.calendar.clock(config.start_timestamp()?);
    let mut timed: Vec<(i64, usize)> = raw
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let b = match r.lifecycle {
                Lifecycle::Start => Boundary::Opening,
                Lifecycle::Complete => Boundary::Closing,
            };
            (clock.wall(r.worked, b), i)
        })
        .collect();
    timed.sort_unstable();
    let events = timed
        .iter()
        .enumerate()
        .map(|(n, &(t, i))| {
            let r = &raw.records[i];
            let d = &raw.draws[r.car];
            Event::new(format!("e{:07}", n + 1), raw.topo.labels[r.station].clone(), t)
                .with_case(car_id(r.car))
                .with_lifecycle(r.lifecycle)
                .with_resource(config.operators[r.operator].id.clone())
                .with_attr("color", AttrValue::Str(d.color.clone()))
                .with_attr("city", AttrValue::Str(d.city.clone()))
        })
        .collect();
    let log = EventLog::from_events(events)?;
    let ocel = objects::build(config, seed, &raw, &clock);
    Ok(SimOutput { log, ocel })
}
