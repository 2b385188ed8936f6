//! Discrete-event simulation of the assembly line in worked time.
//!
//! Each station holds one car (or sub-assembly item) at a time. A finished
//! job keeps its station until the next station on its route is free, unless
//! a buffer sits in between. Sub-assembly outputs wait in unlimited
//! line-side staging until the consuming general-assembly station starts
//! the car.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{Arrival, Injection, LineConfig, Topology};
use crate::error::{Error, Result};
use crate::event_model::Lifecycle;
use crate::time::MS_PER_MINUTE;

pub(crate) const STREAM_ARRIVALS: u64 = 0;
pub(crate) const STREAM_ORDERS: u64 = 1;
const STREAM_CARS: u64 = 2;

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub(crate) fn minutes_to_ms(m: f64) -> i64 {
    (m * MS_PER_MINUTE as f64).round() as i64
}

fn pick_weighted(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u * total < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Random inputs of one car, drawn up front so that they do not depend on
/// the order in which the simulation consumes them.
#[derive(Debug, Clone)]
pub(crate) struct CarDraws {
    pub z: Vec<f64>,
    pub skip: Vec<bool>,
    pub u_op: Vec<f64>,
    pub scale: Vec<f64>,
    pub color: String,
    pub city: String,
}

fn draw_car(cfg: &LineConfig, topo: &Topology, seed: u64, k: usize) -> CarDraws {
    let mut r = rng(seed, STREAM_CARS + k as u64);
    let n = topo.labels.len();
    let (mut z, mut skip, mut u_op, mut scale) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for label in &topo.labels {
        z.push(r.sample::<f64, _>(StandardNormal));
        let u_skip: f64 = r.random();
        u_op.push(r.random::<f64>());
        let mut p_skip = 0.0;
        let mut best_onset = None;
        let mut s = 1.0;
        for inj in &cfg.injections {
            match inj {
                Injection::Deviation(d) if &d.station == label && d.onset <= k && best_onset.is_none_or(|b| d.onset >= b) => {
                    best_onset = Some(d.onset);
                    p_skip = d.skip_probability;
                }
                Injection::Drift(d) if &d.station == label && d.onset <= k => s *= d.service_scale,
                _ => {}
            }
        }
        skip.push(u_skip < p_skip);
        scale.push(s);
    }
    let ca = &cfg.car_attributes;
    let pick = |list: &[super::config::Weighted], u: f64| {
        let w: Vec<f64> = list.iter().map(|x| x.weight).collect();
        list[pick_weighted(&w, u)].value.clone()
    };
    let color = pick(&ca.colors, r.random());
    let city = pick(&ca.cities, r.random());
    CarDraws {
        z,
        skip,
        u_op,
        scale,
        color,
        city,
    }
}

/// Release instants in worked milliseconds.
fn release_times(cfg: &LineConfig, seed: u64, cars: usize) -> Vec<i64> {
    match cfg.arrival {
        Arrival::Saturated => vec![0; cars],
        Arrival::Paced { mu, sigma } => {
            let mut r = rng(seed, STREAM_ARRIVALS);
            let mut t = 0i64;
            (0..cars)
                .map(|k| {
                    if k > 0 {
                        let z: f64 = r.sample(StandardNormal);
                        t += minutes_to_ms((mu + sigma * z).exp()).max(1);
                    }
                    t
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Empty,
    Transit(usize),
    Waiting(usize),
    Busy(usize, usize),
    Done(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    Arrival(usize),
    Ready(usize),
    Finish(usize),
}

/// One start or complete of a car (or its item) at a station.
#[derive(Debug, Clone)]
pub(crate) struct Record {
    pub car: usize,
    pub station: usize,
    pub lifecycle: Lifecycle,
    pub worked: i64,
    pub operator: usize,
}

#[derive(Debug)]
pub(crate) struct RawRun {
    pub topo: Topology,
    pub draws: Vec<CarDraws>,
    pub release: Vec<i64>,
    pub exit: Vec<i64>,
    pub records: Vec<Record>,
}

struct Engine<'a> {
    cfg: &'a LineConfig,
    topo: Topology,
    transfer: i64,
    draws: Vec<CarDraws>,
    realized: Vec<Vec<f64>>,
    rework: Vec<Vec<(usize, f64, f64)>>,
    phase: Vec<Phase>,
    buffers: Vec<VecDeque<usize>>,
    entry: Vec<VecDeque<usize>>,
    /// Per car and station: output available to consumers.
    staged: Vec<Vec<bool>>,
    op_busy: Vec<bool>,
    heap: BinaryHeap<Reverse<(i64, u64, Ev)>>,
    seq: u64,
    records: Vec<Record>,
    exit: Vec<i64>,
    exited: usize,
}

impl<'a> Engine<'a> {
    fn schedule(&mut self, t: i64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Reverse((t, self.seq, ev)));
    }

    /// Next non-skipped position after `pos` on `route` (or the first one when
    /// `pos` is `None`), firing the triggers of skipped stations on the way.
    fn next_position(&mut self, car: usize, route: usize, pos: Option<usize>) -> Option<usize> {
        let start = pos.map_or(0, |p| p + 1);
        for p in start..self.topo.routes[route].len() {
            let st = self.topo.routes[route][p];
            if !self.draws[car].skip[st] {
                return Some(p);
            }
            self.staged[car][st] = true;
            self.fire_triggers(car, st);
        }
        None
    }

    fn fire_triggers(&mut self, car: usize, station: usize) {
        for i in 0..self.topo.triggers[station].len() {
            let c = self.topo.triggers[station][i];
            self.entry[c + 1].push_back(car);
        }
    }

    fn route_end(&mut self, car: usize, route: usize, now: i64) {
        if route == 0 {
            self.exit[car] = now;
            self.exited += 1;
        }
    }

    fn enter(&mut self, station: usize, car: usize, now: i64) {
        if self.transfer == 0 {
            self.phase[station] = Phase::Waiting(car);
        } else {
            self.phase[station] = Phase::Transit(car);
            self.schedule(now + self.transfer, Ev::Ready(station));
        }
    }

    fn service_ms(&mut self, car: usize, station: usize, op: usize) -> i64 {
        let d = &self.draws[car];
        let dist = self.cfg.service[&self.topo.labels[station]];
        let mut minutes = dist.at(d.z[station]) * d.scale[station] / self.cfg.operators[op].speed;
        for &(up, coef, median) in &self.rework[station] {
            let actual = self.realized[car][up];
            if actual.is_finite() {
                minutes += coef * (median - actual).max(0.0);
            }
        }
        self.realized[car][station] = minutes;
        minutes_to_ms(minutes).max(1)
    }

    fn try_start(&mut self, station: usize, car: usize, now: i64) -> bool {
        if self.topo.consumes[station].iter().any(|&c| !self.staged[car][c]) {
            return false;
        }
        let label = &self.topo.labels[station];
        let ops = &self.topo.section_ops[self.topo.section_of[station]];
        let free: Vec<usize> = ops.iter().copied().filter(|&o| !self.op_busy[o]).collect();
        let weights: Vec<f64> = free
            .iter()
            .map(|&o| self.cfg.operators[o].preferences.get(label).copied().unwrap_or(1.0))
            .collect();
        if weights.iter().sum::<f64>() <= 0.0 {
            return false;
        }
        let op = free[pick_weighted(&weights, self.draws[car].u_op[station])];
        self.op_busy[op] = true;
        let dur = self.service_ms(car, station, op);
        self.phase[station] = Phase::Busy(car, op);
        self.records.push(Record {
            car,
            station,
            lifecycle: Lifecycle::Start,
            worked: now,
            operator: op,
        });
        self.schedule(now + dur, Ev::Finish(station));
        self.fire_triggers(car, station);
        true
    }

    fn progress(&mut self, now: i64) {
        loop {
            let mut changed = false;
            for route in 0..self.topo.routes.len() {
                for p in (0..self.topo.routes[route].len()).rev() {
                    let st = self.topo.routes[route][p];
                    let Phase::Done(car) = self.phase[st] else { continue };
                    match self.peek_next(car, route, p) {
                        None => {
                            self.next_position(car, route, Some(p));
                            self.phase[st] = Phase::Empty;
                            self.route_end(car, route, now);
                            changed = true;
                        }
                        Some(q) => {
                            let target = self.topo.routes[route][q];
                            let cap = self.topo.buffer[target];
                            if cap > 0 && self.buffers[target].len() < cap {
                                self.next_position(car, route, Some(p));
                                self.buffers[target].push_back(car);
                                self.phase[st] = Phase::Empty;
                                changed = true;
                            } else if cap == 0 && self.phase[target] == Phase::Empty {
                                self.next_position(car, route, Some(p));
                                self.phase[st] = Phase::Empty;
                                self.enter(target, car, now);
                                changed = true;
                            }
                        }
                    }
                }
            }
            for st in 0..self.phase.len() {
                if self.phase[st] == Phase::Empty {
                    if let Some(car) = self.buffers[st].pop_front() {
                        self.enter(st, car, now);
                        changed = true;
                    }
                }
            }
            for route in 0..self.entry.len() {
                let Some(&car) = self.entry[route].front() else { continue };
                match self.peek_next(car, route, usize::MAX) {
                    None => {
                        self.entry[route].pop_front();
                        self.next_position(car, route, None);
                        self.route_end(car, route, now);
                        changed = true;
                    }
                    Some(q) => {
                        let target = self.topo.routes[route][q];
                        if self.phase[target] == Phase::Empty && self.buffers[target].is_empty() {
                            self.entry[route].pop_front();
                            self.next_position(car, route, None);
                            self.enter(target, car, now);
                            changed = true;
                        }
                    }
                }
            }
            for st in 0..self.phase.len() {
                if let Phase::Waiting(car) = self.phase[st] {
                    changed |= self.try_start(st, car, now);
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Like `next_position` but without side effects; `usize::MAX` means the
    /// route entry.
    fn peek_next(&self, car: usize, route: usize, pos: usize) -> Option<usize> {
        let start = if pos == usize::MAX { 0 } else { pos + 1 };
        (start..self.topo.routes[route].len()).find(|&p| !self.draws[car].skip[self.topo.routes[route][p]])
    }
}

pub(crate) fn run(cfg: &LineConfig, seed: u64, cars: usize) -> Result<RawRun> {
    let topo = Topology::compile(cfg)?;
    let n = topo.labels.len();
    let draws: Vec<CarDraws> = (0..cars).map(|k| draw_car(cfg, &topo, seed, k)).collect();
    let release = release_times(cfg, seed, cars);
    let mut rework = vec![Vec::new(); n];
    for r in &cfg.rework {
        let (up, down) = (topo.index[&r.upstream], topo.index[&r.downstream]);
        rework[down].push((up, r.coefficient, cfg.service[&r.upstream].median()));
    }
    let mut eng = Engine {
        cfg,
        transfer: minutes_to_ms(cfg.transfer_minutes),
        draws,
        realized: vec![vec![f64::NAN; n]; cars],
        rework,
        phase: vec![Phase::Empty; n],
        buffers: vec![VecDeque::new(); n],
        entry: vec![VecDeque::new(); topo.routes.len()],
        staged: vec![vec![false; n]; cars],
        op_busy: vec![false; cfg.operators.len()],
        heap: BinaryHeap::new(),
        seq: 0,
        records: Vec::with_capacity(cars * n * 2),
        exit: vec![i64::MIN; cars],
        exited: 0,
        topo,
    };
    for (k, &t) in release.iter().enumerate() {
        eng.schedule(t, Ev::Arrival(k));
    }
    while let Some(Reverse((now, _, ev))) = eng.heap.pop() {
        match ev {
            Ev::Arrival(car) => {
                eng.entry[0].push_back(car);
                for i in 0..eng.topo.release_chains.len() {
                    let c = eng.topo.release_chains[i];
                    eng.entry[c + 1].push_back(car);
                }
            }
            Ev::Ready(st) => {
                if let Phase::Transit(car) = eng.phase[st] {
                    eng.phase[st] = Phase::Waiting(car);
                }
            }
            Ev::Finish(st) => {
                let Phase::Busy(car, op) = eng.phase[st] else {
                    return Err(Error::Invariant("finish event on an idle station".into()));
                };
                eng.op_busy[op] = false;
                eng.phase[st] = Phase::Done(car);
                eng.staged[car][st] = true;
                eng.records.push(Record {
                    car,
                    station: st,
                    lifecycle: Lifecycle::Complete,
                    worked: now,
                    operator: op,
                });
            }
        }
        // drain simultaneous events before moving jobs
        if eng.heap.peek().is_some_and(|Reverse((t, _, _))| *t == now) {
            continue;
        }
        eng.progress(now);
    }
    if eng.exited != cars {
        return Err(Error::Invariant(format!(
            "simulation stalled with {} of {cars} cars finished",
            eng.exited
        )));
    }
    Ok(RawRun {
        topo: eng.topo,
        draws: eng.draws,
        release,
        exit: eng.exit,
        records: eng.records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_pick_respects_zero_weights() {
        assert_eq!(pick_weighted(&[0.0, 1.0, 0.0], 0.0), 1);
        assert_eq!(pick_weighted(&[0.0, 1.0, 0.0], 0.999), 1);
        assert_eq!(pick_weighted(&[1.0, 1.0], 0.6), 1);
    }

    #[test]
    fn paced_releases_increase() {
        let cfg = LineConfig::default_line();
        let r = release_times(&cfg, 3, 50);
        assert!(r.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(r[0], 0);
    }
}
