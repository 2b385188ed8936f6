//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero on any failure.
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{Datelike, Timelike, Weekday};
use pmline::comparison::{compare_report, duration_emd, CompareOptions};
use pmline::conformance::{align_trace, check_log};
use pmline::cube::{build_cube, Dimension};
use pmline::discovery::{discover_dfg, TreeNet};
use pmline::drift::{drift_report, DriftParams};
use pmline::ocpm::{discover_multigraph, flatten, flattening_metrics, ObjectCentricLog};
use pmline::performance::Upstream;
use pmline::sd::{
    build_stock_flow, calibrate_buffer, detect_relations, paired_production, run_sdlog, simulate_sd, whatif_buffer,
    Scenario, MS_PER_DAY, STOCK,
};
use pmline::simulator::{simulate, BufferSpec, CountRange, DeviationSpec, DriftSpec, LineConfig};
use pmline::time::datetime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn trace_completeness() -> Outcome {
    let cfg = LineConfig::default_line();
    let traces = simulate(&cfg, 0, 50).map_err(err)?.log.build_traces("case").map_err(err)?;
    ensure(traces.len() == 50, || format!("{} traces", traces.len()))?;
    let net = TreeNet::new(&cfg.reference_tree().map_err(err)?).map_err(err)?;
    let report = check_log(&traces, &net).map_err(err)?;
    let mut conforming = 0;
    for t in report.traces.iter().filter(|t| t.cost == 0) {
        let distinct: BTreeSet<&str> = traces.traces[&t.case_id].iter().map(|e| e.activity.as_str()).collect();
        ensure(distinct.len() == 61, || format!("{} visits {} stations", t.case_id, distinct.len()))?;
        conforming += 1;
    }
    ensure(conforming > 0, || "no conforming trace".into())?;
    Ok(format!("{conforming}/50 conforming traces, 61 stations each"))
}

fn calendar_containment() -> Outcome {
    let log = simulate(&LineConfig::default_line(), 0, 50).map_err(err)?.log;
    let outside = log
        .events
        .iter()
        .filter(|e| {
            let t = datetime(e.timestamp);
            let minute = t.hour() * 60 + t.minute();
            let at_close = minute == 17 * 60 && t.second() == 0 && t.nanosecond() == 0;
            matches!(t.weekday(), Weekday::Sat | Weekday::Sun) || minute < 8 * 60 || (minute >= 17 * 60 && !at_close)
        })
        .count();
    ensure(outside == 0, || format!("{outside} events outside working hours"))?;
    Ok(format!("{} events, none outside Mon-Fri 08:00-17:00", log.events.len()))
}

fn deviation_counting() -> Outcome {
    let mut cfg = LineConfig::default_line();
    for (p, onset) in [(1.0, 30), (0.0, 57)] {
        cfg = cfg
            .apply_injection(DeviationSpec {
                station: "SA4".into(),
                skip_probability: p,
                onset,
            })
            .map_err(err)?;
    }
    let traces = simulate(&cfg, 1, 90).map_err(err)?.log.build_traces("case").map_err(err)?;
    let net = TreeNet::new(&cfg.reference_tree().map_err(err)?).map_err(err)?;
    let report = check_log(&traces, &net).map_err(err)?;
    let mm = report.model_moves("SA4");
    ensure(mm == 27, || format!("model_moves(SA4) = {mm}"))?;
    Ok("model_moves(SA4) = 27".into())
}

fn alignment_optimality() -> Outcome {
    let t0 = Instant::now();
    for seed in 0..500u64 {
        let mut r = rng(seed);
        let lts = common::random_lts(&mut r, 8);
        let trace = common::random_trace(&mut r, 6);
        let got = align_trace(&trace, &lts).map(|a| a.cost).ok();
        let want = common::align_cost_oracle(&trace, &lts);
        ensure(got == want, || format!("instance {seed}: cost {got:?}, oracle {want:?}"))?;
    }
    let took = t0.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    Ok(format!("500/500 optimal in {took:.2?}"))
}

fn drift_recovery() -> Outcome {
    let mut cfg = LineConfig::default_line();
    for (station, onset) in [("GA4", 350), ("GA5", 600)] {
        cfg = cfg
            .apply_injection(DriftSpec {
                station: station.into(),
                onset,
                service_scale: 1.5,
            })
            .map_err(err)?;
    }
    let onsets = BTreeMap::from([("GA4", 350usize), ("GA5", 600usize)]);
    let results = (0..20u64).map(|seed| -> Result<bool, String> {
        let traces = simulate(&cfg, seed, 1000).map_err(err)?.log.build_traces("case").map_err(err)?;
        let upstream = Upstream::Explicit(cfg.upstream_map());
        let report =
            drift_report(&traces, &cfg.ga_stations, &DriftParams::default(), 50, &cfg.calendar, &upstream).map_err(err)?;
        let flagged: BTreeSet<&str> = report.flagged().into_iter().collect();
        let close = report
            .change_points()
            .all(|cp| onsets.get(cp.station.as_str()).is_some_and(|&o| cp.ordinal.abs_diff(o) <= 50));
        Ok(flagged == onsets.keys().copied().collect() && close)
    });
    let passed = results.collect::<Result<Vec<_>, _>>()?.iter().filter(|&&p| p).count();
    ensure(passed >= 19, || format!("{passed}/20 seeds"))?;
    Ok(format!("{passed}/20 seeds recover GA4@350 and GA5@600 only"))
}

fn emd_correctness() -> Outcome {
    let mut r = rng(6);
    let sample = |r: &mut ChaCha8Rng| -> Vec<f64> {
        let n = r.random_range(1..=8);
        (0..n).map(|_| (r.random_range(0.0..100.0f64) * 4.0).round() / 4.0).collect()
    };
    let mut worst = 0.0f64;
    for i in 0..200 {
        let (a, b) = (sample(&mut r), sample(&mut r));
        let d = duration_emd(&a, &b).map_err(err)?;
        let lp = common::emd_lp(&a, &b);
        worst = worst.max((d - lp).abs());
        ensure((d - lp).abs() <= 1e-9, || format!("pair {i}: {d} vs LP {lp}"))?;
    }
    for i in 0..1000 {
        let (a, b, c) = (sample(&mut r), sample(&mut r), sample(&mut r));
        let d = |x: &[f64], y: &[f64]| duration_emd(x, y).unwrap();
        let (ab, ba, bc, ac) = (d(&a, &b), d(&b, &a), d(&b, &c), d(&a, &c));
        ensure(d(&a, &a) == 0.0, || format!("triple {i}: d(a,a) != 0"))?;
        ensure(ab >= 0.0 && (ab - ba).abs() <= 1e-9, || format!("triple {i}: asymmetric {ab} {ba}"))?;
        ensure(ac <= ab + bc + 1e-9, || format!("triple {i}: triangle {ac} > {ab} + {bc}"))?;
    }
    Ok(format!("200 pairs within {worst:.1e} of LP, 1000 triples satisfy the metric axioms"))
}

fn convergence_metric() -> Outcome {
    let mut cfg = LineConfig::default_line();
    cfg.object_layer.products_per_order = CountRange { min: 10, max: 10 };
    let ocel = simulate(&cfg, 0, 10).map_err(err)?.ocel;
    let place: Vec<_> = ocel.events.iter().filter(|e| e.activity == "place planned order").collect();
    ensure(place.len() == 1, || format!("{} place order events", place.len()))?;
    let flat = flatten(&ocel, "product").map_err(err)?;
    let copies = flat.log.traces.values().flatten().filter(|e| e.activity == "place planned order").count();
    let factor = flattening_metrics(&ocel, "product").map_err(err)?.activity_replication["place planned order"];
    ensure(copies == 10 && factor == 10.0, || format!("{copies} copies, factor {factor}"))?;
    Ok("place planned order replicated 10x".into())
}

fn check_projection(log: &ObjectCentricLog) -> Result<usize, String> {
    let g = discover_multigraph(log).map_err(err)?;
    for t in log.types() {
        let flat = discover_dfg(&flatten(log, &t).map_err(err)?.log);
        ensure(g.projection(&t) == flat, || format!("projection of {t} differs"))?;
    }
    Ok(log.types().len())
}

fn multigraph_projection() -> Outcome {
    let ocel = simulate(&LineConfig::default_line(), 0, 40).map_err(err)?.ocel;
    let types = check_projection(&ocel)?;
    for seed in 0..100 {
        check_projection(&common::random_ocel(&mut rng(seed), 60))?;
    }
    Ok(format!("{types} types of a simulated log and 100 random logs project exactly"))
}

fn cube_laws() -> Outcome {
    let countries = common::countries();
    for trial in 0..100u64 {
        let mut r = rng(trial);
        let log = common::random_cube_log(&mut r, 1000);
        let dims = vec![
            Dimension::flat("color", "color"),
            Dimension::flat("location", "city").with_parent("country", countries.clone()),
            Dimension::time("time", "timestamp").at_level("month").map_err(err)?,
        ];
        let cube = build_cube(&log, dims).map_err(err)?;
        let cells = cube.cells();
        let mut seen = BTreeSet::new();
        for evs in cells.values() {
            for &e in evs {
                ensure(seen.insert(e), || format!("trial {trial}: event {e} in two cells"))?;
            }
        }
        ensure(seen.len() == log.events.len(), || format!("trial {trial}: cells miss events"))?;

        let colors: Vec<String> = cube.values("color").map_err(err)?.into_iter().collect();
        let cities: Vec<String> = cube.values("location").map_err(err)?.into_iter().collect();
        let c = &colors[r.random_range(0..colors.len())];
        let l = &cities[r.random_range(0..cities.len())];
        let cl = cube.slice("color", &[c]).and_then(|x| x.slice("location", &[l])).map_err(err)?;
        let lc = cube.slice("location", &[l]).and_then(|x| x.slice("color", &[c])).map_err(err)?;
        ensure(cl.event_indices() == lc.event_indices() && cl.cells() == lc.cells(), || {
            format!("trial {trial}: slices do not commute")
        })?;

        let up = cube.roll_up("location").map_err(err)?;
        let mut expected: BTreeMap<Vec<String>, usize> = BTreeMap::new();
        for (key, evs) in &cells {
            let mut k = key.clone();
            k[1] = countries[&k[1]].clone();
            *expected.entry(k).or_default() += evs.len();
        }
        let got: BTreeMap<Vec<String>, usize> = up.cells().into_iter().map(|(k, v)| (k, v.len())).collect();
        ensure(got == expected, || format!("trial {trial}: roll-up counts differ"))?;
    }
    Ok("100/100 trials: partition, slice commutation, roll-up conservation".into())
}

fn two_factory_comparison() -> Outcome {
    let (nl, be) = (LineConfig::factory_nl(), LineConfig::factory_be());
    let options = CompareOptions {
        pairs: vec![("GA4".into(), "GA5".into())],
        ..CompareOptions::default()
    };
    let results = (0..20u64).map(|seed| -> Result<bool, String> {
        let a = simulate(&nl, seed, 300).map_err(err)?.log.build_traces("case").map_err(err)?;
        let b = simulate(&be, seed + 1000, 300).map_err(err)?.log.build_traces("case").map_err(err)?;
        let rep = compare_report(&a, &b, &nl.calendar, &options).map_err(err)?;
        let p = &rep.pairs[0];
        let coupled = p.spearman_a.is_some_and(|r| r < -p.bound_a);
        let independent = p.spearman_b.is_some_and(|r| r.abs() <= p.bound_b);
        let (ga4, ga5) = (&rep.stations["GA4"], &rep.stations["GA5"]);
        Ok(coupled && independent && ga5.a.tail_index > ga5.b.tail_index && ga4.a.peaks == 2)
    });
    let passed = results.collect::<Result<Vec<_>, _>>()?.iter().filter(|&&p| p).count();
    ensure(passed >= 18, || format!("{passed}/20 seeds"))?;
    Ok(format!("{passed}/20 seeds"))
}

fn sd_conservation_and_whatif() -> Outcome {
    let cfg = LineConfig::door_constrained();
    let sd = run_sdlog(&cfg, 0, 400, MS_PER_DAY).map_err(err)?;
    let rel = detect_relations(&sd, 3, 0.7).map_err(err)?;
    let model = build_stock_flow(&sd, &rel.relations).map_err(err)?;
    for scenario in [Scenario::default(), Scenario::default().with(STOCK, 12.5)] {
        let t = simulate_sd(&model, 200, &scenario).map_err(err)?;
        let clamped: BTreeSet<usize> = t.clamps.iter().map(|c| c.step).collect();
        let next = t.steps.iter().skip(1).map(|s| s.cars_in_line).chain([t.final_stock]);
        for (s, after) in t.steps.iter().zip(next) {
            if clamped.contains(&s.step) {
                continue;
            }
            let want = s.cars_in_line + s.arrival_rate - s.production_rate;
            ensure((after - want).abs() <= 1e-12 * want.abs().max(1.0), || {
                format!("step {}: stock {after} vs {want}", s.step)
            })?;
        }
    }

    let buffer = BufferSpec {
        sa_station: "SA7".into(),
        capacity: 3,
    };
    let results = (0..20u64).map(|seed| -> Result<bool, String> {
        let (base, with, h) = paired_production(&cfg, &buffer, seed, 600, MS_PER_DAY).map_err(err)?;
        let effect = calibrate_buffer(&cfg, &buffer, seed + 1000, 600, MS_PER_DAY).map_err(err)?;
        let sd = run_sdlog(&cfg, seed, 600, MS_PER_DAY).map_err(err)?;
        let rel = detect_relations(&sd, 3, 0.7).map_err(err)?;
        let model = build_stock_flow(&sd, &rel.relations).map_err(err)?;
        let predicted = whatif_buffer(&model, &effect, h).map_err(err)?.total_delta;
        Ok(predicted > 0.0 && with - base > 0.0)
    });
    let passed = results.collect::<Result<Vec<_>, _>>()?.iter().filter(|&&p| p).count();
    ensure(passed >= 18, || format!("stock identity holds; what-if sign matched on {passed}/20 seeds"))?;
    Ok(format!("stock identity holds; what-if sign matched on {passed}/20 seeds"))
}

/// Every subcommand writing into `dir`, inputs included.
fn cli_pipeline(dir: &Path) -> Result<(), String> {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let locations = Path::new(env!("CARGO_MANIFEST_DIR")).join("config/locations.csv");
    let parent = format!("location=country:{}", locations.display());
    let runs: Vec<Vec<String>> = vec![
        vec!["simulate", "--seed", "3", "--cars", "60", "--deviation", "SA4:0.2", "--out", &p("log.csv"), "--ocel-out", &p("ocel.json")],
        vec!["simulate", "--preset", "factory-be", "--seed", "4", "--cars", "60", "--out", &p("log_b.csv")],
        vec!["discover", "--log", &p("log.csv"), "--noise", "0.2", "--out", &p("tree.json"), "--tree-dot", &p("tree.dot"), "--dfg-dot", &p("dfg.dot")],
        vec!["conform", "--log", &p("log.csv"), "--preset", "default", "--out", &p("conform.json"), "--dot", &p("conform.dot")],
        vec!["perf", "--log", &p("log.csv"), "--preset", "default", "--out", &p("perf.csv")],
        vec!["dotted", "--log", &p("log.csv"), "--out", &p("dotted.csv")],
        vec!["cube", "--log", &p("log.csv"), "--dim", "color=color", "--dim", "location=city", "--parent", &parent,
             "--time", "time=timestamp", "--level", "time=month", "--query", "rollup location", "--out", &p("cube.csv"),
             "--materialize", "white,Netherlands,2017-01", "--materialize-out", &p("cell.csv")],
        vec!["drift", "--log", &p("log.csv"), "--preset", "default", "--stations", "GA4,GA5", "--window", "10",
             "--min-segment", "10", "--out", &p("drift.json")],
        vec!["compare", "--log-a", &p("log.csv"), "--log-b", &p("log_b.csv"), "--pair", "GA4:GA5", "--out", &p("compare.json"),
             "--pairs-dir", &p("pairs")],
        vec!["ocdfg", "--ocel", &p("ocel.json"), "--out", &p("ocdfg.dot")],
        vec!["flattenstats", "--ocel", &p("ocel.json"), "--out", &p("flatten.json")],
        vec!["sdlog", "--log", &p("log.csv"), "--preset", "default", "--window-hours", "2", "--max-lag", "2",
             "--out", &p("sdlog.csv"), "--relations-out", &p("relations.json"), "--model-out", &p("model.json")],
        vec!["whatif", "--sdmodel", &p("model.json"), "--buffer", "SA7:3", "--cars", "150", "--seed", "2",
             "--out", &p("whatif.csv"), "--summary-out", &p("whatif.json")],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for args in runs {
        let code = pmline::cli::run(std::iter::once("pmline".to_string()).chain(args.iter().cloned()));
        ensure(code == 0, || format!("`{}` exited with {code}", args.join(" ")))?;
    }
    Ok(())
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn cli_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().map_err(err)?, tempfile::tempdir().map_err(err)?);
    cli_pipeline(a.path())?;
    cli_pipeline(b.path())?;
    let (fa, fb) = (files(a.path()), files(b.path()));
    ensure(fa.keys().eq(fb.keys()), || "different output file sets".into())?;
    for (name, bytes) in &fa {
        ensure(fb[name] == *bytes, || format!("{name} differs between runs"))?;
        ensure(!bytes.is_empty(), || format!("{name} is empty"))?;
    }
    Ok(format!("12 subcommands, {} output files byte-identical", fa.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("trace completeness", trace_completeness),
        ("calendar containment", calendar_containment),
        ("deviation counting", deviation_counting),
        ("alignment optimality", alignment_optimality),
        ("drift recovery", drift_recovery),
        ("EMD correctness", emd_correctness),
        ("convergence metric", convergence_metric),
        ("multigraph projection", multigraph_projection),
        ("cube laws", cube_laws),
        ("two-factory comparison", two_factory_comparison),
        ("SD conservation and what-if", sd_conservation_and_whatif),
        ("CLI determinism", cli_determinism),
    ];
    let t0 = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail} ({:.1?})", i + 1, t.elapsed());
    }
    println!("{} of 12 criteria passed in {:.1?}", 12 - failed, t0.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
