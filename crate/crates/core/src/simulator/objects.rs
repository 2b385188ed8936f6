//! Order, product, component and delivery objects around a simulated run.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::engine::{rng, RawRun, STREAM_ORDERS};
use super::config::LineConfig;
use crate::event_model::{AttrValue, Lifecycle};
use crate::ocpm::{ObjectCentricLog, OcEvent, OcObject};
use crate::time::{Boundary, WorkClock, MS_PER_MINUTE};

pub fn car_id(k: usize) -> String {
    format!("car-{:05}", k + 1)
}

const SECOND: i64 = 1000;

struct Pending {
    worked: i64,
    boundary: Boundary,
    activity: String,
    refs: Vec<(&'static str, String)>,
    attrs: BTreeMap<String, AttrValue>,
}

pub(crate) fn build(cfg: &LineConfig, seed: u64, raw: &RawRun, clock: &WorkClock) -> ObjectCentricLog {
    let cars = raw.release.len();
    let mut objects = BTreeMap::new();
    let mut pending: Vec<Pending> = Vec::new();
    let obj = |t: &str| OcObject {
        object_type: t.to_string(),
        attrs: BTreeMap::new(),
    };
    let ncomp = cfg.object_layer.components_per_product as usize;
    let components = |k: usize| (1..=ncomp).map(move |i| format!("{}-c{i}", car_id(k)));

    for k in 0..cars {
        let mut o = obj("product");
        o.attrs.insert("color".into(), AttrValue::Str(raw.draws[k].color.clone()));
        o.attrs.insert("city".into(), AttrValue::Str(raw.draws[k].city.clone()));
        objects.insert(car_id(k), o);
        for c in components(k) {
            objects.insert(c, obj("component"));
        }
    }

    let range = cfg.object_layer.products_per_order;
    let mut r = rng(seed, STREAM_ORDERS);
    let mut first = 0;
    let mut n = 0;
    while first < cars {
        n += 1;
        let size = (r.random_range(range.min..=range.max) as usize).min(cars - first);
        let members: Vec<usize> = (first..first + size).collect();
        first += size;
        let order = format!("o{n}");
        let delivery = format!("d{n}");
        objects.insert(order.clone(), obj("order"));
        objects.insert(delivery.clone(), obj("delivery"));
        let t0 = raw.release[members[0]];
        let mut step = 0;
        let at = |step: &mut i64| {
            *step += 1;
            t0 + *step * SECOND
        };
        let mut with_products = vec![("order", order.clone())];
        with_products.extend(members.iter().map(|&k| ("product", car_id(k))));
        pending.push(Pending {
            worked: t0,
            boundary: Boundary::Opening,
            activity: "place planned order".into(),
            refs: with_products.clone(),
            attrs: BTreeMap::new(),
        });
        for &k in &members {
            for c in components(k) {
                pending.push(Pending {
                    worked: at(&mut step),
                    boundary: Boundary::Opening,
                    activity: "check inventory".into(),
                    refs: vec![("order", order.clone()), ("component", c)],
                    attrs: BTreeMap::new(),
                });
            }
        }
        pending.push(Pending {
            worked: at(&mut step),
            boundary: Boundary::Opening,
            activity: "confirm products".into(),
            refs: with_products,
            attrs: BTreeMap::new(),
        });
        let done = members.iter().map(|&k| raw.exit[k]).max().unwrap_or(t0);
        pending.push(Pending {
            worked: done + MS_PER_MINUTE,
            boundary: Boundary::Closing,
            activity: "pay order".into(),
            refs: vec![("order", order.clone())],
            attrs: BTreeMap::new(),
        });
        for (i, &k) in members.iter().enumerate() {
            pending.push(Pending {
                worked: done + 2 * MS_PER_MINUTE + i as i64 * SECOND,
                boundary: Boundary::Closing,
                activity: "complete delivery".into(),
                refs: vec![("product", car_id(k)), ("delivery", delivery.clone())],
                attrs: BTreeMap::new(),
            });
        }
    }

    let early: BTreeSet<usize> = cfg.ga_stations.iter().take(3).filter_map(|s| raw.topo.index.get(s).copied()).collect();
    for rec in raw.records.iter().filter(|r| r.lifecycle == Lifecycle::Complete) {
        let mut refs = vec![("product", car_id(rec.car))];
        if early.contains(&rec.station) {
            refs.extend(components(rec.car).map(|c| ("component", c)));
        }
        let mut attrs = BTreeMap::new();
        attrs.insert("resource".into(), AttrValue::Str(cfg.operators[rec.operator].id.clone()));
        pending.push(Pending {
            worked: rec.worked,
            boundary: Boundary::Closing,
            activity: raw.topo.labels[rec.station].clone(),
            refs,
            attrs,
        });
    }

    let mut timed: Vec<(i64, usize, Pending)> = pending
        .into_iter()
        .enumerate()
        .map(|(i, p)| (clock.wall(p.worked, p.boundary), i, p))
        .collect();
    timed.sort_by_key(|(t, i, _)| (*t, *i));
    let events = timed
        .into_iter()
        .enumerate()
        .map(|(i, (t, _, p))| {
            let mut omap: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
            for (ty, id) in p.refs {
                omap.entry(ty.to_string()).or_default().insert(id);
            }
            OcEvent {
                event_id: format!("oe{:07}", i + 1),
                activity: p.activity,
                timestamp: t,
                omap,
                attrs: p.attrs,
            }
        })
        .collect();
    ObjectCentricLog { objects, events }
}
