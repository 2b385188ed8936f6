//! Command-line front end. Every output file is written to a temporary file
//! next to its destination and renamed into place.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::comparison::{compare_report, pair_table, CompareOptions, DEFAULT_MAX_VARIANTS};
use crate::conformance::check_log;
use crate::cube::{build_cube, parse_hierarchy_csv, Dimension};
use crate::discovery::{discover_dfg, discover_tree, dotted_chart, DottedSort, ProcessTree, TreeNet};
use crate::drift::{drift_report, DriftParams};
use crate::error::{Error, Result};
use crate::event_model::{parse_csv_log, parse_json_log, write_csv_log, write_json_log, ColumnMapping, EventLog, TraceLog};
use crate::ocpm::{discover_multigraph, flattening_metrics, parse_ocel, write_ocel};
use crate::performance::{bottleneck_ranking, quantile_bands, station_stats, Metric, Upstream};
use crate::sd::{build_stock_flow, calibrate_buffer, detect_relations, extract_sdlog, whatif_buffer, StockFlowModel, MS_PER_HOUR};
use crate::simulator::{simulate, BufferSpec, DeviationSpec, DriftSpec, LineConfig};
use crate::time::Calendar;

#[derive(Debug, Parser)]
#[command(name = "pmline", version, about = "Production-line event logs and process mining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the assembly line and write its event log.
    Simulate(SimulateArgs),
    /// Discover a process tree (JSON) and optionally the DFG (DOT).
    Discover(DiscoverArgs),
    /// Align a log against a process tree; per-activity deviation counts.
    Conform(ConformArgs),
    /// Per-station waiting, service and sojourn statistics.
    Perf(PerfArgs),
    /// Dotted chart as CSV.
    Dotted(DottedArgs),
    /// Build a process cube, apply queries and write its cells.
    Cube(CubeArgs),
    /// Change points in per-station sojourn series.
    Drift(DriftArgs),
    /// Compare two logs: duration EMDs, variant EMD, pair correlations.
    Compare(CompareArgs),
    /// Object-centric directly-follows multigraph as DOT.
    Ocdfg(OcdfgArgs),
    /// Convergence and divergence of flattening onto one object type.
    Flattenstats(FlattenArgs),
    /// Windowed SD-log, mined relations and fitted stock-flow model.
    Sdlog(SdlogArgs),
    /// Production with and without a sub-assembly buffer.
    Whatif(WhatifArgs),
}

#[derive(Debug, Args)]
struct LineArgs {
    /// Line configuration (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in line: default, door-constrained, factory-nl, factory-be.
    #[arg(long)]
    preset: Option<String>,
}

impl LineArgs {
    fn load(&self) -> Result<Option<LineConfig>> {
        if let Some(p) = &self.config {
            let c: LineConfig = serde_json::from_reader(BufReader::new(File::open(p)?))?;
            c.validate()?;
            return Ok(Some(c));
        }
        self.preset.as_deref().map(preset).transpose()
    }

    fn load_or_default(&self) -> Result<LineConfig> {
        Ok(self.load()?.unwrap_or_else(LineConfig::default_line))
    }

    /// Calendar and upstream rule for log analysis.
    fn analysis(&self) -> Result<(Calendar, Upstream)> {
        Ok(match self.load()? {
            Some(c) => (c.calendar.clone(), Upstream::Explicit(c.upstream_map())),
            None => (Calendar::default(), Upstream::PreviousComplete),
        })
    }
}

fn preset(name: &str) -> Result<LineConfig> {
    match name {
        "default" => Ok(LineConfig::default_line()),
        "door-constrained" => Ok(LineConfig::door_constrained()),
        "factory-nl" => Ok(LineConfig::factory_nl()),
        "factory-be" => Ok(LineConfig::factory_be()),
        _ => Err(Error::Config(format!("unknown preset `{name}`"))),
    }
}

fn parse_deviation(s: &str) -> std::result::Result<DeviationSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let (station, p, onset) = match parts.as_slice() {
        [st, p] => (st, p, "0"),
        [st, p, o] => (st, p, *o),
        _ => return Err("expected STATION:PROBABILITY[:ONSET]".into()),
    };
    Ok(DeviationSpec {
        station: station.to_string(),
        skip_probability: p.parse().map_err(|e| format!("{e}"))?,
        onset: onset.parse().map_err(|e| format!("{e}"))?,
    })
}

fn parse_drift(s: &str) -> std::result::Result<DriftSpec, String> {
    match s.split(':').collect::<Vec<_>>().as_slice() {
        [st, onset, scale] => Ok(DriftSpec {
            station: st.to_string(),
            onset: onset.parse().map_err(|e| format!("{e}"))?,
            service_scale: scale.parse().map_err(|e| format!("{e}"))?,
        }),
        _ => Err("expected STATION:ONSET:SCALE".into()),
    }
}

fn parse_buffer(s: &str) -> std::result::Result<BufferSpec, String> {
    match s.split_once(':') {
        Some((st, cap)) => Ok(BufferSpec {
            sa_station: st.to_string(),
            capacity: cap.parse().map_err(|e| format!("{e}"))?,
        }),
        None => Err("expected STATION:CAPACITY".into()),
    }
}

fn parse_pair(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once(':')
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .ok_or_else(|| "expected X:Y".to_string())
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    line: LineArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    cars: usize,
    /// Skip a station: STATION:PROBABILITY[:ONSET].
    #[arg(long, value_parser = parse_deviation)]
    deviation: Vec<DeviationSpec>,
    /// Scale service times: STATION:ONSET:SCALE.
    #[arg(long, value_parser = parse_drift)]
    drift: Vec<DriftSpec>,
    /// Buffer before a sub-assembly station: STATION:CAPACITY.
    #[arg(long, value_parser = parse_buffer)]
    buffer: Vec<BufferSpec>,
    /// Event log; JSON when the name ends in .json, CSV otherwise.
    #[arg(long)]
    out: PathBuf,
    /// Object-centric log (JSON).
    #[arg(long)]
    ocel_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LogArgs {
    /// Event log, CSV or JSON (by extension).
    #[arg(long)]
    log: PathBuf,
    /// Case attribute.
    #[arg(long, default_value = "case")]
    case: String,
}

impl LogArgs {
    fn events(&self) -> Result<EventLog> {
        read_log(&self.log)
    }

    fn traces(&self) -> Result<TraceLog> {
        self.events()?.build_traces(&self.case)
    }
}

#[derive(Debug, Args)]
struct DiscoverArgs {
    #[command(flatten)]
    log: LogArgs,
    /// Share of the strongest arc below which DFG arcs are ignored.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Process tree (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Process tree (DOT).
    #[arg(long)]
    tree_dot: Option<PathBuf>,
    /// Directly-follows graph (DOT).
    #[arg(long)]
    dfg_dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConformArgs {
    #[command(flatten)]
    log: LogArgs,
    /// Process tree (JSON); without it the reference tree of the line is used.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    line: LineArgs,
    /// Report (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Activities annotated with deviation counts (DOT).
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PerfArgs {
    #[command(flatten)]
    log: LogArgs,
    /// Line whose calendar and station order define waiting times.
    #[command(flatten)]
    line: LineArgs,
    /// Ranking metric: service, waiting or sojourn.
    #[arg(long, default_value = "sojourn")]
    metric: String,
    /// Number of quantile colour bands over the ranked means.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=20))]
    bands: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DottedArgs {
    #[command(flatten)]
    log: LogArgs,
    /// Case order: first-event or duration.
    #[arg(long, default_value = "first-event")]
    sort: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CubeArgs {
    #[command(flatten)]
    log: LogArgs,
    /// Dimension over an attribute: NAME=ATTRIBUTE.
    #[arg(long)]
    dim: Vec<String>,
    /// Day/month/year dimension: NAME=ATTRIBUTE.
    #[arg(long)]
    time: Vec<String>,
    /// Coarser level from a child,parent CSV: DIM=LEVEL:FILE.
    #[arg(long)]
    parent: Vec<String>,
    /// Starting level: DIM=LEVEL.
    #[arg(long)]
    level: Vec<String>,
    /// Query applied in order: `slice d=v`, `dice d=v1,v2`, `rollup d`, `drilldown d`.
    #[arg(long)]
    query: Vec<String>,
    /// Cells with event and case counts (CSV).
    #[arg(long)]
    out: PathBuf,
    /// Cell to materialize, one comma-separated value per dimension.
    #[arg(long, requires = "materialize_out")]
    materialize: Option<String>,
    /// Sublog of the materialized cell (CSV).
    #[arg(long, requires = "materialize")]
    materialize_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DriftArgs {
    #[command(flatten)]
    log: LogArgs,
    #[command(flatten)]
    line: LineArgs,
    /// Stations to scan (comma-separated); all activities by default.
    #[arg(long, value_delimiter = ',')]
    stations: Vec<String>,
    #[arg(long, default_value_t = 50)]
    window: usize,
    #[arg(long, default_value_t = 4.5)]
    threshold: f64,
    #[arg(long, default_value_t = 100)]
    min_segment: usize,
    #[arg(long, default_value_t = 3)]
    consecutive: usize,
    /// Window of the rolling mean in the report.
    #[arg(long, default_value_t = 50)]
    rolling: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    log_a: PathBuf,
    #[arg(long)]
    log_b: PathBuf,
    #[arg(long, default_value = "case")]
    case: String,
    #[command(flatten)]
    line: LineArgs,
    /// Station pair to correlate: X:Y.
    #[arg(long, value_parser = parse_pair)]
    pair: Vec<(String, String)>,
    #[arg(long, default_value_t = DEFAULT_MAX_VARIANTS)]
    max_variants: usize,
    /// Report (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Pair tables of log a, one CSV per pair, named DIR/a_X_Y.csv and DIR/b_X_Y.csv.
    #[arg(long)]
    pairs_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OcdfgArgs {
    /// Object-centric log (JSON).
    #[arg(long)]
    ocel: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FlattenArgs {
    #[arg(long)]
    ocel: PathBuf,
    /// Object type to flatten onto; all types when omitted.
    #[arg(long = "type")]
    object_type: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SdlogArgs {
    #[command(flatten)]
    log: LogArgs,
    #[command(flatten)]
    line: LineArgs,
    /// Window length in hours.
    #[arg(long, default_value_t = 24)]
    window_hours: i64,
    #[arg(long, default_value_t = 3)]
    max_lag: usize,
    #[arg(long, default_value_t = 0.7)]
    threshold: f64,
    /// SD-log (CSV).
    #[arg(long)]
    out: PathBuf,
    /// Mined relations (JSON).
    #[arg(long)]
    relations_out: Option<PathBuf>,
    /// Stock-flow model (JSON).
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WhatifArgs {
    /// Stock-flow model (JSON).
    #[arg(long)]
    sdmodel: PathBuf,
    /// Buffer to evaluate: STATION:CAPACITY.
    #[arg(long, value_parser = parse_buffer)]
    buffer: BufferSpec,
    /// Line used to calibrate the buffer's effect (door-constrained preset by default).
    #[command(flatten)]
    line: LineArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cars per calibration run.
    #[arg(long, default_value_t = 600)]
    cars: usize,
    /// Steps to simulate; the length of the model's arrival series by default.
    #[arg(long)]
    steps: Option<usize>,
    /// Per-step production of baseline and scenario (CSV).
    #[arg(long)]
    out: PathBuf,
    /// Buffer effect and monthly deltas (JSON).
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

/// Run with the given arguments (program name first); returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            let body = serde_json::json!({ "error": e.to_string(), "exit_code": code });
            eprintln!("{body}");
            code
        }
    }
}

fn read_log(path: &Path) -> Result<EventLog> {
    let f = BufReader::new(File::open(path)?);
    if has_ext(path, "json") {
        parse_json_log(f)
    } else {
        parse_csv_log(f, &ColumnMapping::default())
    }
}

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Write through a temporary file in the destination directory.
fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => {
            let mut cfg = a.line.load_or_default()?;
            for d in a.deviation {
                cfg = cfg.apply_injection(d)?;
            }
            for d in a.drift {
                cfg = cfg.apply_injection(d)?;
            }
            for b in a.buffer {
                cfg = cfg.apply_injection(b)?;
            }
            let out = simulate(&cfg, a.seed, a.cars)?;
            if has_ext(&a.out, "json") {
                write_atomic(&a.out, |w| write_json_log(&out.log, w))?;
            } else {
                write_atomic(&a.out, |w| write_csv_log(&out.log, w))?;
            }
            if let Some(p) = a.ocel_out {
                write_atomic(&p, |w| write_ocel(&out.ocel, w))?;
            }
        }
        Command::Discover(a) => {
            let traces = a.log.traces()?;
            let tree = discover_tree(&traces, a.noise)?;
            write_json(&a.out, &tree)?;
            if let Some(p) = a.tree_dot {
                write_text(&p, &tree.to_dot())?;
            }
            if let Some(p) = a.dfg_dot {
                write_text(&p, &discover_dfg(&traces).to_dot())?;
            }
        }
        Command::Conform(a) => {
            let tree: ProcessTree = match &a.model {
                Some(p) => serde_json::from_reader(BufReader::new(File::open(p)?))?,
                None => a.line.load_or_default()?.reference_tree()?,
            };
            tree.validate()?;
            let net = TreeNet::new(&tree)?;
            let report = check_log(&a.log.traces()?, &net)?;
            write_json(&a.out, &report)?;
            if let Some(p) = a.dot {
                write_text(&p, &report.to_dot())?;
            }
        }
        Command::Perf(a) => {
            let metric: Metric = a.metric.parse()?;
            let (cal, up) = a.line.analysis()?;
            let stats = station_stats(&a.log.traces()?, &cal, &up);
            let ranking = bottleneck_ranking(&stats, metric);
            let bands = quantile_bands(&ranking, a.bands as usize);
            write_json(&a.out, &serde_json::json!({ "stations": stats, "ranking": ranking, "bands": bands }))?;
        }
        Command::Dotted(a) => {
            let sort: DottedSort = a.sort.parse()?;
            let chart = dotted_chart(&a.log.traces()?, sort);
            write_atomic(&a.out, |w| chart.write_csv(w))?;
        }
        Command::Cube(a) => run_cube(a)?,
        Command::Drift(a) => {
            let params = DriftParams {
                window: a.window,
                threshold: a.threshold,
                min_segment: a.min_segment,
                consecutive: a.consecutive,
            };
            let (cal, up) = a.line.analysis()?;
            let traces = a.log.traces()?;
            let stations: Vec<String> = if a.stations.is_empty() {
                traces
                    .traces
                    .values()
                    .flatten()
                    .map(|e| e.activity.clone())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect()
            } else {
                a.stations
            };
            let report = drift_report(&traces, &stations, &params, a.rolling, &cal, &up)?;
            write_json(&a.out, &report)?;
        }
        Command::Compare(a) => {
            let cal = a.line.load()?.map_or_else(Calendar::default, |c| c.calendar);
            let la = read_log(&a.log_a)?.build_traces(&a.case)?;
            let lb = read_log(&a.log_b)?.build_traces(&a.case)?;
            let opts = CompareOptions {
                pairs: a.pair.clone(),
                max_variants: a.max_variants,
                ..CompareOptions::default()
            };
            let report = compare_report(&la, &lb, &cal, &opts)?;
            write_json(&a.out, &report)?;
            if let Some(dir) = a.pairs_dir {
                std::fs::create_dir_all(&dir)?;
                for (x, y) in &a.pair {
                    for (tag, log) in [("a", &la), ("b", &lb)] {
                        let t = pair_table(log, x, y, &cal);
                        write_atomic(&dir.join(format!("{tag}_{x}_{y}.csv")), |w| t.write_csv(w))?;
                    }
                }
            }
        }
        Command::Ocdfg(a) => {
            let log = parse_ocel(BufReader::new(File::open(&a.ocel)?))?;
            let g = discover_multigraph(&log)?;
            write_text(&a.out, &g.to_dot())?;
        }
        Command::Flattenstats(a) => {
            let log = parse_ocel(BufReader::new(File::open(&a.ocel)?))?;
            let types: Vec<String> = match a.object_type {
                Some(t) => vec![t],
                None => log.types().into_iter().collect(),
            };
            let metrics = types
                .iter()
                .map(|t| flattening_metrics(&log, t))
                .collect::<Result<Vec<_>>>()?;
            write_json(&a.out, &metrics)?;
        }
        Command::Sdlog(a) => {
            let cal = a.line.load()?.map_or_else(Calendar::default, |c| c.calendar);
            let sd = extract_sdlog(&a.log.traces()?, a.window_hours * MS_PER_HOUR, &cal)?;
            write_atomic(&a.out, |w| sd.write_csv(w))?;
            if a.relations_out.is_some() || a.model_out.is_some() {
                let rel = detect_relations(&sd, a.max_lag, a.threshold)?;
                for n in &rel.notices {
                    eprintln!("notice: {n}");
                }
                if let Some(p) = &a.relations_out {
                    write_json(p, &rel)?;
                }
                if let Some(p) = &a.model_out {
                    write_json(p, &build_stock_flow(&sd, &rel.relations)?)?;
                }
            }
        }
        Command::Whatif(a) => {
            let model: StockFlowModel = serde_json::from_reader(BufReader::new(File::open(&a.sdmodel)?))?;
            let cfg = a.line.load()?.unwrap_or_else(LineConfig::door_constrained);
            let effect = calibrate_buffer(&cfg, &a.buffer, a.seed, a.cars, model.parameters.window_ms)?;
            let steps = a.steps.unwrap_or(model.parameters.arrivals.len()).max(1);
            let cmp = whatif_buffer(&model, &effect, steps)?;
            write_atomic(&a.out, |w| cmp.write_csv(w))?;
            if let Some(p) = a.summary_out {
                write_json(
                    &p,
                    &serde_json::json!({
                        "effect": cmp.effect,
                        "periods": cmp.periods,
                        "total_delta": cmp.total_delta,
                    }),
                )?;
            }
        }
    }
    Ok(())
}

fn assignment(s: &str) -> Result<(&str, &str)> {
    s.split_once('=')
        .ok_or_else(|| Error::Parameter(format!("expected NAME=VALUE, got `{s}`")))
}

fn run_cube(a: CubeArgs) -> Result<()> {
    let events = a.log.events()?;
    let mut dims: Vec<Dimension> = Vec::new();
    for d in &a.dim {
        let (name, attr) = assignment(d)?;
        dims.push(Dimension::flat(name, attr));
    }
    for d in &a.time {
        let (name, attr) = assignment(d)?;
        dims.push(Dimension::time(name, attr));
    }
    let find = |dims: &mut Vec<Dimension>, name: &str| -> Result<usize> {
        dims.iter()
            .position(|d| d.name == name)
            .ok_or_else(|| Error::UnknownDimension(name.to_string()))
    };
    for p in &a.parent {
        let (name, rest) = assignment(p)?;
        let (level, file) = rest
            .split_once(':')
            .ok_or_else(|| Error::Parameter(format!("expected DIM=LEVEL:FILE, got `{p}`")))?;
        let mapping = parse_hierarchy_csv(BufReader::new(File::open(file)?))?;
        let i = find(&mut dims, name)?;
        dims[i] = dims[i].clone().with_parent(level, mapping);
    }
    for l in &a.level {
        let (name, level) = assignment(l)?;
        let i = find(&mut dims, name)?;
        dims[i] = dims[i].clone().at_level(level)?;
    }
    let mut cube = build_cube(&events, dims)?;
    for q in &a.query {
        cube = cube.apply(q)?;
    }
    let split = cube.split_cases();
    if split > 0 {
        eprintln!("notice: {split} cases have events in more than one cell");
    }
    let cells = cube.cells();
    let names: Vec<String> = cube.dimensions().iter().map(|d| d.name.clone()).collect();
    write_atomic(&a.out, |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header = names.clone();
        header.extend(["events".to_string(), "cases".to_string()]);
        out.write_record(&header)?;
        for (key, evs) in &cells {
            let cases: BTreeSet<Option<&str>> = evs.iter().map(|&e| events.events[e].case_id.as_deref()).collect();
            let mut rec = key.clone();
            rec.push(evs.len().to_string());
            rec.push(cases.len().to_string());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    })?;
    if let (Some(coords), Some(path)) = (a.materialize, a.materialize_out) {
        let coords: Vec<&str> = if coords.is_empty() { Vec::new() } else { coords.split(',').collect() };
        let sub = cube.materialize(&coords, &a.log.case)?;
        if sub.is_empty() {
            eprintln!("notice: cell is empty");
        }
        let log = sub.to_event_log()?;
        write_atomic(&path, |w| write_csv_log(&log, w))?;
    }
    Ok(())
}
