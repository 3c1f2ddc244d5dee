use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use spacetimehap::bohmengine::{
    equilibrium_preservation_check, sample_equilibrium, Foliation, GuidingFlow, Path, Potential,
    Record,
};
use spacetimehap::config::{parse_config, RunConfig, SCHEMA_VERSION};
use spacetimehap::experiments::{
    run_ergodicity, run_fork_demo, run_free_choice_with_leaves, scan_free_choice_with_leaves,
    StateSpec,
};
use spacetimehap::framechange::{
    change_coordinates, compare_foliations, guide_via_boosted_flow, ObserverFrame,
};
use spacetimehap::hapgeometry::{build_causal_graph, classify, HapEvent};
use spacetimehap::io::{histogram_svg, line_plot_svg, trajectories_csv, write_json};
use spacetimehap::relativity::Boost;
use spacetimehap::{Error, Result};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config schema 1)");

#[derive(Parser, Debug)]
#[command(name = "spacetimehap", version = VERSION, about = "Spacetime with hap coordinates and Bohmian worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run directory for config.json, result.json and exports.
    #[arg(long, global = true, default_value = "run")]
    out: PathBuf,

    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for the engine.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true)]
    quiet: bool,

    /// Also write SVG plots.
    #[arg(long, global = true)]
    plot: bool,

    /// Events file for `classify` and `causal-graph`.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Separation class of each event pair.
    Classify,
    /// Transitively reduced causal graph of a set of events.
    CausalGraph,
    /// Wavefunction snapshots.
    Evolve,
    /// Equilibrium-sampled trajectories as CSV.
    Trajectories,
    /// Transports an equilibrium ensemble and tests it against |psi|^2.
    EquilibriumCheck,
    ForkDemo,
    FreeChoice,
    FreeChoiceScan,
    /// Coordinates of an event for a moving observer.
    FrameChange,
    Ergodicity,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventsFile {
    #[serde(default)]
    pairs: Option<Vec<[HapEvent; 2]>>,
    #[serde(default)]
    events: Option<Vec<HapEvent>>,
}

struct Run {
    out: PathBuf,
    quiet: bool,
    plot: bool,
}

impl Run {
    fn file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn svg(&self, name: &str, body: impl FnOnce() -> String) -> Result<()> {
        if self.plot {
            fs::write(self.file(name), body())?;
        }
        Ok(())
    }

    fn csv(&self, paths: &[Path], every: usize) -> Result<()> {
        fs::write(
            self.file("trajectories.csv"),
            trajectories_csv(paths, every),
        )?;
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(
            &fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        )?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(i) = &cli.input {
        cfg.input = Some(i.clone());
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "--threads must be at least 1".into(),
            ));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    resolve(cli.command, &mut cfg)?;
    fs::create_dir_all(&cli.out)?;
    write_json(
        &cli.out.join("config.json"),
        &Resolved {
            schema_version: SCHEMA_VERSION,
            command: name(cli.command),
            config: &cfg,
        },
    )?;
    let r = Run {
        out: cli.out.clone(),
        quiet: cli.quiet,
        plot: cli.plot,
    };
    match cli.command {
        Command::Classify => cmd_classify(&r, &cfg),
        Command::CausalGraph => cmd_causal_graph(&r, &cfg),
        Command::Evolve => cmd_evolve(&r, &cfg),
        Command::Trajectories => cmd_trajectories(&r, &cfg),
        Command::EquilibriumCheck => cmd_equilibrium(&r, &cfg),
        Command::ForkDemo => cmd_fork(&r, &cfg),
        Command::FreeChoice => cmd_free_choice(&r, &cfg),
        Command::FreeChoiceScan => cmd_scan(&r, &cfg),
        Command::FrameChange => cmd_frame_change(&r, &cfg),
        Command::Ergodicity => cmd_ergodicity(&r, &cfg),
    }
}

#[derive(Serialize)]
struct Resolved<'a> {
    schema_version: u32,
    command: &'static str,
    #[serde(flatten)]
    config: &'a RunConfig,
}

fn name(c: Command) -> &'static str {
    match c {
        Command::Classify => "classify",
        Command::CausalGraph => "causal-graph",
        Command::Evolve => "evolve",
        Command::Trajectories => "trajectories",
        Command::EquilibriumCheck => "equilibrium-check",
        Command::ForkDemo => "fork-demo",
        Command::FreeChoice => "free-choice",
        Command::FreeChoiceScan => "free-choice-scan",
        Command::FrameChange => "frame-change",
        Command::Ergodicity => "ergodicity",
    }
}

/// Fills in the defaults the command needs and checks everything before any
/// computation starts.
fn resolve(cmd: Command, cfg: &mut RunConfig) -> Result<()> {
    cfg.engine.validate()?;
    match cmd {
        Command::Classify | Command::CausalGraph => {
            if let Some(p) = cfg.input.clone() {
                let text = fs::read_to_string(&p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                let de = &mut serde_json::Deserializer::from_str(&text);
                let f: EventsFile = serde_path_to_error::deserialize(de).map_err(|e| {
                    Error::Config(format!("{}: `{}`: {}", p.display(), e.path(), e.inner()))
                })?;
                cfg.pairs = cfg.pairs.take().or(f.pairs);
                cfg.events = cfg.events.take().or(f.events);
            }
            let missing = if cmd == Command::Classify {
                cfg.pairs.is_none()
            } else {
                cfg.events.is_none()
            };
            if missing {
                let key = if cmd == Command::Classify {
                    "pairs"
                } else {
                    "events"
                };
                return Err(Error::Config(format!(
                    "missing required key `{key}` (inline or via --input)"
                )));
            }
            return Ok(());
        }
        Command::ForkDemo => {
            if cfg.state.is_some() || cfg.potential.is_some() {
                return Err(Error::Config(
                    "fork-demo builds its state and potential from the `fork` section; remove `state` and `potential`".into(),
                ));
            }
            let fork = cfg.fork.get_or_insert_with(Default::default);
            fork.validate()?;
            cfg.grid()?.build(2)?;
            return Ok(());
        }
        Command::Ergodicity => {
            if cfg.state.is_none() {
                cfg.state = Some(StateSpec::Vortex { omega: 1.0 });
                cfg.potential
                    .get_or_insert(Potential::Harmonic { omega: 1.0 });
            }
            cfg.ergodicity.get_or_insert_with(Default::default);
        }
        Command::Evolve => {
            cfg.evolve.get_or_insert_with(Default::default);
        }
        Command::Trajectories => {
            cfg.trajectories.get_or_insert_with(Default::default);
        }
        Command::EquilibriumCheck => {
            cfg.equilibrium.get_or_insert_with(Default::default);
        }
        Command::FreeChoice => {
            cfg.free_choice
                .get_or_insert_with(Default::default)
                .validate()?;
        }
        Command::FreeChoiceScan => {
            cfg.free_choice
                .get_or_insert_with(Default::default)
                .validate()?;
            cfg.scan.get_or_insert_with(Default::default);
        }
        Command::FrameChange => {
            let fc = cfg
                .frame_change
                .as_ref()
                .ok_or_else(|| Error::Config("missing required key `frame_change`".into()))?;
            Boost::new(fc.v.clone())?;
            fc.event.validate()?;
            if let Some(p) = &fc.compare_potential {
                p.validate(cfg.state()?.ndim()?)?;
            }
        }
    }
    cfg.potential.get_or_insert(Potential::Free);
    let state = cfg.state()?;
    state.validate()?;
    let ndim = state.ndim()?;
    cfg.grid()?.build(ndim)?;
    cfg.potential().validate(ndim)?;
    Ok(())
}

fn cmd_classify(r: &Run, cfg: &RunConfig) -> Result<()> {
    let pairs = cfg.pairs.as_deref().unwrap_or_default();
    let classes = pairs
        .iter()
        .map(|[a, b]| classify(a, b))
        .collect::<Result<Vec<_>>>()?;
    for c in &classes {
        println!("{c}");
    }
    write_json(
        &r.file("result.json"),
        &serde_json::json!({ "classes": classes }),
    )
}

fn cmd_causal_graph(r: &Run, cfg: &RunConfig) -> Result<()> {
    let events = cfg.events.as_deref().unwrap_or_default();
    let g = build_causal_graph(events)?;
    fs::write(r.file("edges.csv"), g.edge_csv())?;
    fs::write(r.file("graph.dot"), g.to_dot())?;
    r.say(format!("{} events, {} edges", g.nodes.len(), g.edges.len()));
    write_json(
        &r.file("result.json"),
        &serde_json::json!({ "nodes": g.nodes.len(), "edges": g.edges }),
    )
}

fn cmd_evolve(r: &Run, cfg: &RunConfig) -> Result<()> {
    let ec = cfg.evolve.clone().unwrap_or_default();
    if !(ec.duration.is_finite() && ec.snapshots >= 1) {
        return Err(Error::InvalidArgument(
            "evolve needs a finite duration and at least one snapshot".into(),
        ));
    }
    let flow = cfg.flow()?;
    let t0 = flow.reference_time();
    let mut times = Vec::new();
    let mut norms = Vec::new();
    let mut files = Vec::new();
    for k in 0..ec.snapshots {
        let t = if ec.snapshots == 1 {
            t0 + ec.duration
        } else {
            t0 + ec.duration * k as f64 / (ec.snapshots - 1) as f64
        };
        let psi = flow.wavefunction_at(t)?;
        let mass = psi.guard_mass(cfg.engine.guard_cells);
        if mass > cfg.engine.guard_mass {
            return Err(Error::BoundaryContamination { time: t, mass });
        }
        let name = format!("snapshot_{k:03}.json");
        write_json(&r.file(&name), &psi.to_snapshot())?;
        times.push(t);
        norms.push(psi.norm_sq());
        files.push(name);
    }
    r.say(format!(
        "{} snapshots, final norm {:.12}",
        files.len(),
        norms[norms.len() - 1]
    ));
    write_json(
        &r.file("result.json"),
        &serde_json::json!({ "times": times, "norms": norms, "snapshots": files }),
    )
}

fn sample_paths(flow: &GuidingFlow, n: usize, seed: u64, duration: f64) -> Result<Vec<Path>> {
    let t0 = flow.reference_time();
    let ens = sample_equilibrium(&flow.wavefunction_at(t0)?, n, seed)?;
    flow.integrate_batch(&ens.samples, t0, t0 + duration, Record::Full)?
        .into_iter()
        .collect()
}

fn cmd_trajectories(r: &Run, cfg: &RunConfig) -> Result<()> {
    let tc = cfg.trajectories.clone().unwrap_or_default();
    let flow = cfg.flow()?;
    let paths = sample_paths(&flow, tc.samples, cfg.seed, tc.duration)?;
    r.csv(&paths, tc.every)?;
    let ends: Vec<&[f64]> = paths.iter().map(Path::last_point).collect();
    r.svg("trajectories.svg", || fan_plot(&paths, 0))?;
    r.say(format!("{} trajectories written", paths.len()));
    write_json(
        &r.file("result.json"),
        &serde_json::json!({ "samples": paths.len(), "seed": cfg.seed, "duration": tc.duration, "final_points": ends }),
    )
}

fn fan_plot(paths: &[Path], axis: usize) -> String {
    let series: Vec<(String, Vec<(f64, f64)>)> = paths
        .iter()
        .map(|p| {
            (
                String::new(),
                p.times
                    .iter()
                    .zip(&p.points)
                    .map(|(t, c)| (*t, c[axis]))
                    .collect(),
            )
        })
        .collect();
    line_plot_svg("trajectories", "t", &format!("c{}", axis + 1), &series)
}

fn cmd_equilibrium(r: &Run, cfg: &RunConfig) -> Result<()> {
    let ec = cfg.equilibrium.clone().unwrap_or_default();
    let flow = cfg.flow()?;
    let t0 = flow.reference_time();
    let ens = sample_equilibrium(&flow.wavefunction_at(t0)?, ec.samples, cfg.seed)?;
    let report = equilibrium_preservation_check(&flow, &ens, t0 + ec.duration)?;
    r.say(format!(
        "KS {:?} vs critical {:.4}: {}",
        report.ks,
        report.critical,
        if report.passed { "pass" } else { "fail" }
    ));
    write_json(&r.file("result.json"), &report)
}

fn cmd_fork(r: &Run, cfg: &RunConfig) -> Result<()> {
    let fc = cfg.fork.clone().unwrap_or_default();
    let flow = fc.flow(cfg.grid()?, &cfg.engine)?;
    let run = run_fork_demo(&flow, &fc, cfg.seed)?;
    r.csv(&run.exported, 10)?;
    r.svg("fork_bundles.svg", || fan_plot(&run.exported, 1))?;
    let rep = &run.report;
    r.say(format!(
        "left {:.4} (Born {:.4}), right {:.4} (Born {:.4}), marginal KS {:?} (critical {:.4})",
        rep.left_fraction,
        rep.born_left,
        rep.right_fraction,
        rep.born_right,
        rep.ks,
        rep.ks_critical
    ));
    write_json(&r.file("result.json"), rep)
}

fn cmd_free_choice(r: &Run, cfg: &RunConfig) -> Result<()> {
    let fc = cfg.free_choice.clone().unwrap_or_default();
    let flow = cfg.flow()?;
    let (res, leaves) = run_free_choice_with_leaves(&flow, &fc)?;
    r.csv(&leaves, 10)?;
    r.say(format!(
        "ratio {:.3e}, unilateral for Bob: {}",
        res.ratio, res.unilateral_for_bob
    ));
    write_json(&r.file("result.json"), &res)
}

fn cmd_scan(r: &Run, cfg: &RunConfig) -> Result<()> {
    let fc = cfg.free_choice.clone().unwrap_or_default();
    let sc = cfg.scan.clone().unwrap_or_default();
    let flow = cfg.flow()?;
    let (scan, leaves) = scan_free_choice_with_leaves(&flow, &fc, &sc.v_values, &sc.delta_values)?;
    r.csv(&leaves, 10)?;
    r.svg("ratio_vs_v.svg", || {
        let series: Vec<(String, Vec<(f64, f64)>)> = sc
            .delta_values
            .iter()
            .map(|&d| {
                let pts = scan
                    .rows
                    .iter()
                    .filter(|row| row.delta == d)
                    .map(|row| (row.v, row.ratio))
                    .collect();
                (format!("delta = {d}"), pts)
            })
            .collect();
        line_plot_svg("|delta d2| / |delta c1|", "v", "ratio", &series)
    })?;
    r.say(format!(
        "{} rows, max ratio {:.3e}",
        scan.rows.len(),
        scan.max_ratio
    ));
    write_json(&r.file("result.json"), &scan)
}

fn cmd_frame_change(r: &Run, cfg: &RunConfig) -> Result<()> {
    let fc = cfg
        .frame_change
        .clone()
        .ok_or_else(|| Error::Config("missing required key `frame_change`".into()))?;
    let flow = Arc::new(cfg.flow()?);
    let frame = ObserverFrame::new(Boost::new(fc.v.clone())?, flow.clone());
    let change = change_coordinates(&frame, &fc.event)?;
    let other = guide_via_boosted_flow(&frame, &fc.event)?;
    let path_difference = change
        .d_e
        .iter()
        .flatten()
        .zip(other.d.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let comparison = match &fc.compare_potential {
        Some(p) => {
            let mut second = cfg.clone();
            second.potential = Some(p.clone());
            let b = ObserverFrame::new(frame.boost().clone(), Arc::new(second.flow()?));
            Some(compare_foliations(&frame, &b, &fc.event)?)
        }
        None => None,
    };
    let lo = change.t_star.iter().fold(fc.event.t, |a, b| a.min(*b));
    let hi = change.t_star.iter().fold(fc.event.t, |a, b| a.max(*b));
    let leaf = flow.leaves(fc.event.t, &[fc.event.hap_flat()], lo, hi)?;
    r.csv(&leaf, 10)?;
    r.say(format!("d_E = {:?}", change.d_e));
    write_json(
        &r.file("result.json"),
        &serde_json::json!({
            "frame_change": change,
            "boosted_flow_d_E": other.d,
            "path_difference": path_difference,
            "comparison": comparison,
        }),
    )
}

fn cmd_ergodicity(r: &Run, cfg: &RunConfig) -> Result<()> {
    let ec = cfg.ergodicity.clone().unwrap_or_default();
    let flow = cfg.flow()?;
    let report = run_ergodicity(&flow, &ec, cfg.seed)?;
    if let Some(p) = &report.trajectory {
        r.csv(std::slice::from_ref(p), 1)?;
    }
    r.svg("ergodicity.svg", || {
        histogram_svg(
            "one coordinate three ways",
            &format!("c{}", ec.axis + 1),
            &[
                ("time".to_string(), &report.time_series[..]),
                ("space".to_string(), &report.spatial[..]),
                ("hap".to_string(), &report.hap[..]),
            ],
            40,
        )
    })?;
    r.say(format!(
        "KS time/space {:.4}, time/hap {:.4}, space/hap {:.4}",
        report.ks_time_space, report.ks_time_hap, report.ks_space_hap
    ));
    write_json(&r.file("result.json"), &report)
}
