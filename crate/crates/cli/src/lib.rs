//! Command-line front end: `run`, `sweep` and `bound`.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use delaybandit::env::{game_bounds, play, DelaySpec};
use delaybandit::{metrics, AlgorithmSpec, Error, RunRecord, ScenarioSpec, Visibility};
use rayon::prelude::*;

pub use config::{AlgorithmConfig, AlgorithmName, RunConfig, SweepAxis, SweepConfig};

pub const THREADS_ENV: &str = "DELAYBANDIT_THREADS";
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, arguments or inputs. Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure while running. Exit code 3.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Mode(_) | Error::Io(_) => CliError::Config(e.to_string()),
            Error::InvalidDistribution(_) | Error::Protocol(_) | Error::Aggregation(_) | Error::Invariant(_) => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "delaybandit", version, about = "Adversarial bandits with delayed feedback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration for every seed and write per-seed traces and summaries.
    Run(RunArgs),
    /// Run a configuration over the values of its sweep axis.
    Sweep(RunArgs),
    /// Print regret bounds of a delay schedule as JSON.
    Bound(BoundArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Replaces the configured seeds; repeatable.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub algo: Option<AlgorithmName>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub dmax: Option<f64>,
    /// Report the oracle bound as `15 · oracle + 10 e² K ln K + 5`.
    #[arg(long = "scale-15")]
    pub scale_15: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    /// Take arms, horizon and delays from a run configuration.
    #[arg(long, conflicts_with_all = ["arms", "horizon", "delays"])]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub arms: Option<usize>,
    #[arg(long, required_unless_present = "config")]
    pub horizon: Option<usize>,
    /// `constant:D`, `uniform:MAX`, `example1` or a path to a delay CSV.
    #[arg(long, required_unless_present = "config")]
    pub delays: Option<String>,
    /// Seed for generated delays.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "scale-15")]
    pub scale_15: bool,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let written = cmd_run(&args)?;
            for path in written {
                println!("{}", path.display());
            }
        }
        Command::Sweep(args) => {
            let written = cmd_sweep(&args)?;
            for path in written {
                println!("{}", path.display());
            }
        }
        Command::Bound(args) => println!("{}", cmd_bound(&args)?),
    }
    Ok(())
}

/// Loads the config named by `args` and applies the command-line overrides.
pub fn effective_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if !args.seeds.is_empty() {
        cfg.seeds = args.seeds.clone();
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(name) = args.algo {
        if name != cfg.algorithm.name() {
            cfg.algorithm = AlgorithmConfig::from_name(name);
        }
    }
    match &mut cfg.algorithm {
        AlgorithmConfig::Exp3 { eta } => override_param(eta, args.eta),
        AlgorithmConfig::Dew { eta, d_max } => {
            override_param(eta, args.eta);
            override_param(d_max, args.dmax);
        }
        AlgorithmConfig::SkipperDew { beta, eta } => {
            override_param(beta, args.beta);
            override_param(eta, args.eta);
        }
        AlgorithmConfig::Doubling => {}
    }
    if cfg.seeds.is_empty() {
        return Err(CliError::Config("no seeds given".into()));
    }
    Ok(cfg)
}

fn override_param(slot: &mut Option<f64>, value: Option<f64>) {
    if value.is_some() {
        *slot = value;
    }
}

fn check_mode(scenario: &ScenarioSpec, algorithm: &AlgorithmConfig) -> Result<(), CliError> {
    if *algorithm == AlgorithmConfig::Doubling && scenario.visibility != Visibility::AtActionTime {
        return Err(CliError::Config(
            "doubling needs delays revealed at action time (visibility \"at-action-time\")".into(),
        ));
    }
    Ok(())
}

/// Runs `cfg` on every seed. Seeds are processed in parallel; records come
/// back in seed order.
pub fn run_seeds(cfg: &RunConfig) -> Result<Vec<RunRecord>, CliError> {
    check_mode(&cfg.scenario, &cfg.algorithm)?;
    let game = cfg.scenario.materialize()?;
    let bounds = game_bounds(&game)?;
    let algorithm = cfg.algorithm.resolve(&game);
    cfg.seeds
        .par_iter()
        .map(|&seed| play(&cfg.scenario, &game, bounds, &algorithm, seed).map_err(CliError::from))
        .collect()
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Builds a rayon pool capped by `DELAYBANDIT_THREADS` when set.
fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Runtime(e.to_string()))
}

/// Writes `run_seed{N}.csv` and `summary_seed{N}.json` for every seed and
/// returns the written paths.
pub fn cmd_run(args: &RunArgs) -> Result<Vec<PathBuf>, CliError> {
    let cfg = effective_config(args)?;
    let records = thread_pool()?.install(|| run_seeds(&cfg))?;
    let dir = out_dir(&cfg)?;
    let mut written = Vec::new();
    for rec in &records {
        let trace = dir.join(format!("run_seed{}.csv", rec.seed));
        write_file(&trace, &output::trace_csv(&rec.rows))?;
        let summary = dir.join(format!("summary_seed{}.json", rec.seed));
        write_file(&summary, &output::summary_json(rec, args.scale_15))?;
        written.push(trace);
        written.push(summary);
    }
    Ok(written)
}

/// Writes `sweep_detail.csv` (one row per value and seed) and
/// `sweep_summary.csv` (mean and standard error of the regret per value).
pub fn cmd_sweep(args: &RunArgs) -> Result<Vec<PathBuf>, CliError> {
    let cfg = effective_config(args)?;
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("config has no sweep section".into()))?;
    if sweep.values.is_empty() {
        return Err(CliError::Config("sweep axis has no values".into()));
    }
    let variants = sweep
        .values
        .iter()
        .map(|&v| cfg.with_axis_value(sweep.axis, v))
        .collect::<Result<Vec<_>, _>>()?;
    for v in &variants {
        check_mode(&v.scenario, &v.algorithm)?;
    }
    let results = thread_pool()?.install(|| variants.par_iter().map(run_seeds).collect::<Result<Vec<_>, _>>())?;
    let dir = out_dir(&cfg)?;
    let detail = dir.join("sweep_detail.csv");
    write_file(&detail, &output::sweep_detail_csv(sweep.axis, &sweep.values, &results))?;
    let summary = dir.join("sweep_summary.csv");
    write_file(
        &summary,
        &output::sweep_summary_csv(sweep.axis, &sweep.values, &results),
    )?;
    Ok(vec![detail, summary])
}

/// Parses a `--delays` source into a delay specification.
pub fn parse_delay_source(source: &str) -> Result<DelaySpec, CliError> {
    let number = |s: &str| {
        s.parse::<u64>()
            .map_err(|_| CliError::Config(format!("bad delay source {source:?}")))
    };
    Ok(if let Some(d) = source.strip_prefix("constant:") {
        DelaySpec::Constant { delay: number(d)? }
    } else if let Some(m) = source.strip_prefix("uniform:") {
        DelaySpec::Uniform { max: number(m)? }
    } else if source == "example1" {
        DelaySpec::Example1
    } else {
        DelaySpec::FromFile {
            path: PathBuf::from(source),
        }
    })
}

/// Returns the bound report as pretty JSON.
pub fn cmd_bound(args: &BoundArgs) -> Result<String, CliError> {
    let (arms, horizon, delays) = match &args.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            let game = cfg.scenario.materialize()?;
            (cfg.scenario.arms, cfg.scenario.horizon, game.delays)
        }
        None => {
            let (Some(arms), Some(horizon), Some(source)) = (args.arms, args.horizon, args.delays.as_deref()) else {
                return Err(CliError::Config("bound needs --arms, --horizon and --delays".into()));
            };
            let scenario = ScenarioSpec {
                arms,
                horizon,
                losses: delaybandit::LossSpec::ConstantGap { gap: 0.0 },
                delays: parse_delay_source(source)?,
                visibility: Visibility::AtObservationTime,
                seed: args.seed,
            };
            let delays = delaybandit::env::generate_delays(&scenario)?;
            (arms, horizon, delays)
        }
    };
    let mut report = metrics::bound_report(delays.as_slice(), arms, horizon)?;
    if args.scale_15 {
        report.oracle = metrics::scaled_oracle_bound(report.oracle, arms);
    }
    Ok(serde_json::to_string_pretty(&report).expect("report serializes"))
}

/// Resolved algorithm of a config, as it would be run.
pub fn resolved_algorithm(cfg: &RunConfig) -> Result<AlgorithmSpec, CliError> {
    let game = cfg.scenario.materialize()?;
    Ok(cfg.algorithm.resolve(&game))
}
