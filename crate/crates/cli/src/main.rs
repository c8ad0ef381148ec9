//! Command-line front end: single runs, sweeps and config inspection.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ltev2x::config::parse_config;
use ltev2x::kpi::write_run_outputs;
use ltev2x::scenario::Scenario;
use ltev2x::sweep::{parse_seeds, run_sweep, SweepAxis, SweepSpec};
use ltev2x::{run_simulation, ConfigError, DownlinkMode, RunConfig, SimError};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL_SWEEP: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ltev2x",
    version,
    about = "LTE-relayed V2X latency and reliability simulator"
)]
struct Cli {
    /// Print the default configuration as TOML and exit.
    #[arg(long)]
    print_default_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seed and write records.csv, summary.json and cdf.csv.
    Run(RunArgs),
    /// Run a grid of configurations and seeds.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed; defaults to the first configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "LTEV2X_OUT")]
    out: Option<PathBuf>,
    /// Print the dropped participants as CSV and exit without simulating.
    #[arg(long)]
    dump_scenario: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// `bandwidth=10,20,40,100` or `mcs=0.1523,0.377,...`.
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated downlink modes.
    #[arg(long, value_delimiter = ',')]
    modes: Vec<String>,
    /// `1..5` or `1,2,3`; defaults to the configured seeds.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, env = "LTEV2X_OUT")]
    out: Option<PathBuf>,
    /// Parallel runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

enum Failure {
    Config(String),
    Other(String),
    Partial(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => config_failure(&c),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn config_failure(e: &ConfigError) -> Failure {
    Failure::Config(format!("{}: {e}", e.code()))
}

fn load(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => parse_config(p).map_err(|e| config_failure(&e)),
        None => Ok(RunConfig::default()),
    }
}

fn out_dir(arg: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    arg.unwrap_or_else(|| cfg.run.output_dir.clone())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let cfg = load(args.config.as_deref())?;
    let seed = args.seed.unwrap_or(cfg.run.seeds[0]);
    if args.dump_scenario {
        let scenario = Scenario::build(&cfg, seed).map_err(|e| Failure::Other(e.to_string()))?;
        let stdout = io::stdout();
        scenario
            .write_csv(stdout.lock())
            .map_err(|e| Failure::Other(e.to_string()))?;
        return Ok(());
    }
    let out = out_dir(args.out, &cfg);
    let records = run_simulation(&cfg, seed)?;
    let summary = write_run_outputs(&out, &cfg, seed, &records)?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.4}"));
    println!(
        "seed {seed}: {} of {} deliveries, success rate {}, mean latency {} ms -> {}",
        summary.n_success,
        summary.n_expected,
        fmt(summary.success_rate),
        fmt(summary.mean_latency_ms),
        out.display()
    );
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let cfg = load(args.config.as_deref())?;
    let axis = args
        .axis
        .as_deref()
        .map(str::parse::<SweepAxis>)
        .transpose()
        .map_err(Failure::Config)?;
    let modes = args
        .modes
        .iter()
        .map(|m| m.parse::<DownlinkMode>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::Config)?;
    let seeds = match args.seeds.as_deref() {
        Some(s) => parse_seeds(s).map_err(Failure::Config)?,
        None => cfg.run.seeds.clone(),
    };
    let out = out_dir(args.out, &cfg);
    fs::create_dir_all(&out).map_err(|e| Failure::Other(format!("{}: {e}", out.display())))?;
    let outcome = run_sweep(
        &cfg,
        &SweepSpec { axis, modes, seeds },
        Some(&out),
        args.jobs,
    )?;
    let mut stdout = io::stdout().lock();
    for r in &outcome.rows {
        let _ = writeln!(
            stdout,
            "{} seed {}: success {} mean {}",
            r.point,
            r.seed,
            r.success_rate.map_or("NA".into(), |x| format!("{x:.4}")),
            r.mean_latency_ms.map_or("NA".into(), |x| format!("{x:.3}"))
        );
    }
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        let list: Vec<String> = outcome.failures.iter().map(ToString::to_string).collect();
        Err(Failure::Partial(list.join("\n")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_default_config {
        print!("{}", RunConfig::default().to_toml());
        return ExitCode::SUCCESS;
    }
    let result = match cli.command {
        Some(Command::Run(args)) => run(args),
        Some(Command::Sweep(args)) => sweep(args),
        None => {
            eprintln!("nothing to do; see --help");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_FAILURE)
        }
        Err(Failure::Partial(m)) => {
            eprintln!("some sweep runs failed:\n{m}");
            ExitCode::from(EXIT_PARTIAL_SWEEP)
        }
    }
}
