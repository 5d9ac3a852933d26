//! Command-line entry points.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::abstraction::{initial_grid, Builder};
use crate::config::RunConfig;
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::model_check::concrete_reach;
use crate::par;
use crate::refinement::{initial_results, refine, RefineSettings, RegionResult};
use crate::results::{safe_volume, to_csv, to_json, to_svg, volume_histogram, HistogramBin};

pub const WORKERS_ENV: &str = "MOSAIC_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "mosaic",
    version,
    about = "Failure-probability bounds for neural controllers under actuator faults"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build, check and refine the abstraction, then write results.
    Verify {
        config: PathBuf,
        /// Override a configuration key, e.g. `--set horizon=5`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Exact failure probability of one concrete start state.
    Oracle {
        config: PathBuf,
        /// Comma-separated state vector.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        state: Vec<f64>,
        /// Horizon; defaults to the configured one.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Write the initial abstraction in explicit transition format.
    ExportModel {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PhaseTimes {
    pub build_s: f64,
    pub check_s: f64,
    pub refine_s: f64,
    pub export_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundSummary {
    pub round: usize,
    pub regions_split: usize,
    pub states_built: usize,
    pub regions: usize,
    pub safe_volume: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MemoryGuardStatus {
    pub limit: usize,
    pub triggered: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub environment: String,
    pub horizon: usize,
    pub epsilon: f64,
    pub p_safe: f64,
    pub workers: usize,
    pub initial_cells: usize,
    pub states: usize,
    pub choices: usize,
    pub transitions: usize,
    pub fail_states: usize,
    pub regions: usize,
    pub total_volume: f64,
    pub safe_volume: f64,
    pub histogram: Vec<HistogramBin>,
    pub rounds: Vec<RoundSummary>,
    pub memory_guard: MemoryGuardStatus,
    pub times: PhaseTimes,
    /// State count and wall time for scale comparison only; not acceptance targets.
    pub note: &'static str,
}

const HISTOGRAM_EDGES: [f64; 6] = [0.0, 0.01, 0.05, 0.1, 0.2, 1.0];

fn workers(cfg: &RunConfig) -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .or(cfg.workers)
}

fn effective_workers(requested: Option<usize>) -> usize {
    if !par::is_parallel() {
        return 1;
    }
    requested.filter(|&n| n > 0).unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
}

pub struct VerifyOutcome {
    pub regions: Vec<RegionResult>,
    pub report: Report,
}

/// Runs the full pipeline and writes `regions.csv`, `regions.json`,
/// `heatmap.svg` (2-D only) and `report.json` into the output directory.
/// On a memory-guard abort the report is still written.
pub fn verify(cfg: &RunConfig) -> Result<VerifyOutcome> {
    let requested = workers(cfg);
    par::with_workers(requested, || {
        verify_inner(cfg, effective_workers(requested))
    })
}

fn verify_inner(cfg: &RunConfig, workers: usize) -> Result<VerifyOutcome> {
    let net = cfg.load_network()?;
    let faults = cfg.fault_model()?;
    let env = &cfg.environment;
    let opts = cfg.build_options();
    let cells = initial_grid(cfg.init_region(), &cfg.grid_widths())?;
    fs::create_dir_all(&cfg.output_dir)?;

    let mut report = Report {
        environment: env.name().to_string(),
        horizon: cfg.horizon,
        epsilon: opts.epsilon,
        p_safe: cfg.p_safe,
        workers,
        initial_cells: cells.len(),
        states: 0,
        choices: 0,
        transitions: 0,
        fail_states: 0,
        regions: 0,
        total_volume: cells.iter().map(|c| c.volume()).sum(),
        safe_volume: 0.0,
        histogram: Vec::new(),
        rounds: Vec::new(),
        memory_guard: MemoryGuardStatus {
            limit: cfg.max_states,
            triggered: false,
        },
        times: PhaseTimes::default(),
        note:
            "states and times are reported for scale comparison only and are not acceptance targets",
    };

    let builder = Builder::new(&net, env, &faults, opts.clone())?;
    let mut cache = builder.new_cache();
    let t = Instant::now();
    let built = builder.build(&cells, cfg.horizon, None, &mut cache);
    report.times.build_s = t.elapsed().as_secs_f64();
    let mdp = match built {
        Ok(m) => m,
        Err(e @ Error::MemoryGuard { .. }) => {
            report.memory_guard.triggered = true;
            write_report(cfg, &report)?;
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    report.states = mdp.num_states();
    report.choices = mdp.num_choices();
    report.transitions = mdp.num_transitions();
    report.fail_states = mdp.states().iter().filter(|s| s.fail).count();

    let t = Instant::now();
    let initial = initial_results(&mdp, cfg.p_safe, opts.epsilon)?;
    report.times.check_s = t.elapsed().as_secs_f64();
    drop(mdp);

    let t = Instant::now();
    let settings = RefineSettings {
        k: cfg.horizon,
        p_safe: cfg.p_safe,
        max_rounds: cfg.refinement_rounds,
        build: opts,
    };
    let refined = refine(&net, env, &faults, initial, &settings, &mut cache);
    report.times.refine_s = t.elapsed().as_secs_f64();
    let refined = match refined {
        Ok(r) => r,
        Err(e @ Error::MemoryGuard { .. }) => {
            report.memory_guard.triggered = true;
            write_report(cfg, &report)?;
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    report.rounds = refined
        .rounds
        .iter()
        .map(|r| RoundSummary {
            round: r.round,
            regions_split: r.regions_split,
            states_built: r.states_built,
            regions: r.regions.len(),
            safe_volume: safe_volume(&r.regions, cfg.p_safe),
        })
        .collect();
    let regions = refined.regions;

    let t = Instant::now();
    report.regions = regions.len();
    report.safe_volume = safe_volume(&regions, cfg.p_safe);
    report.histogram = volume_histogram(&regions, &HISTOGRAM_EDGES)?;
    fs::write(cfg.output_dir.join("regions.csv"), to_csv(&regions))?;
    fs::write(cfg.output_dir.join("regions.json"), to_json(&regions))?;
    if env.state_dim() == 2 {
        let names = env.variable_names();
        fs::write(
            cfg.output_dir.join("heatmap.svg"),
            to_svg(&regions, [names[0], names[1]])?,
        )?;
    }
    report.times.export_s = t.elapsed().as_secs_f64();
    write_report(cfg, &report)?;
    Ok(VerifyOutcome { regions, report })
}

fn write_report(cfg: &RunConfig, report: &Report) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir)?;
    let text = serde_json::to_string_pretty(report).expect("report serialises");
    fs::write(cfg.output_dir.join("report.json"), text)?;
    Ok(())
}

pub fn oracle(cfg: &RunConfig, state: &[f64], k: Option<usize>) -> Result<f64> {
    let net = cfg.load_network()?;
    let faults = cfg.fault_model()?;
    if state.len() != cfg.environment.state_dim() {
        return Err(Error::Config(format!(
            "state has {} components, {} needs {}",
            state.len(),
            cfg.environment.name(),
            cfg.environment.state_dim()
        )));
    }
    concrete_reach(
        &net,
        &cfg.environment,
        &faults,
        state,
        k.unwrap_or(cfg.horizon),
    )
}

pub fn export_model(cfg: &RunConfig, out: &std::path::Path) -> Result<usize> {
    let requested = workers(cfg);
    par::with_workers(requested, || {
        let net = cfg.load_network()?;
        let faults = cfg.fault_model()?;
        let cells = initial_grid(cfg.init_region(), &cfg.grid_widths())?;
        let builder = Builder::new(&net, &cfg.environment, &faults, cfg.build_options())?;
        let mut cache = builder.new_cache();
        let mdp = builder.build(&cells, cfg.horizon, None, &mut cache)?;
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        mdp.export_model(out)?;
        Ok(mdp.num_states())
    })
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::MemoryGuard { .. } => 2,
        _ => 1,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
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
            eprintln!("error[{}]: {e}", e.code());
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Verify { config, set } => {
            let cfg = RunConfig::load(&config, &set)?;
            let out = verify(&cfg)?;
            let r = &out.report;
            println!(
                "{}: {} states, {} regions, safe volume {:.6} of {:.6}, results in {}",
                r.environment,
                r.states,
                r.regions,
                r.safe_volume,
                r.total_volume,
                cfg.output_dir.display()
            );
        }
        Command::Oracle {
            config,
            state,
            k,
            set,
        } => {
            let cfg = RunConfig::load(&config, &set)?;
            println!("{}", oracle(&cfg, &state, k)?);
        }
        Command::ExportModel { config, out, set } => {
            let cfg = RunConfig::load(&config, &set)?;
            let n = export_model(&cfg, &out)?;
            println!("wrote {n} states to {}", out.display());
        }
    }
    Ok(())
}
