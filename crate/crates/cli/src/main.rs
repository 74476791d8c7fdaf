//! `ctrlpinn`: train Control PINNs, validate learned controls against
//! classical solvers, export fields and render plots.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or
//! arguments, 3 training diverged, 4 missing or malformed input files.

mod artifacts;
mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use control_pinn::config::RunConfig;
use control_pinn::problems::ControlProblem;
use control_pinn::trainer::{self, Checkpoint, RunStatus};
use control_pinn::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "ctrlpinn", version, about = "Control PINN training and validation")]
struct Cli {
    /// Caps point-level worker threads (default: all cores).
    #[arg(long, env = "CTRLPINN_THREADS", global = true, hide_env_values = true)]
    threads: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network and write a run directory.
    Train(TrainArgs),
    /// Check a learned (or supplied) control with the classical solvers.
    Validate(ValidateArgs),
    /// Re-render the SVG plots of a run directory.
    Plot { run_dir: PathBuf },
    /// Write the learned fields of a run on a fine grid.
    Export(ExportArgs),
}

#[derive(Args)]
struct Overrides {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for initialization and sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Epoch budget.
    #[arg(long)]
    epochs: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Heat diffusivity.
    #[arg(long)]
    diffusivity: Option<f64>,
    /// Use the configured long epoch budget (10000 by default).
    #[arg(long)]
    long: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Configuration file; same as --config.
    config_file: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    /// Continue from a checkpoint file.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Run directory written by `train`.
    run_dir: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    /// Validate this exported control field instead of a run's network.
    #[arg(long)]
    control: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    run_dir: PathBuf,
    /// Destination (default: <run_dir>/export).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Time nodes of the export grid.
    #[arg(long)]
    nt: Option<usize>,
    /// Nodes per spatial axis of the export grid.
    #[arg(long)]
    nx: Option<usize>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => EXIT_CONFIG,
            Error::Format { .. } | Error::Io { .. } | Error::Json(_) => EXIT_INPUT,
            _ => EXIT_RUNTIME,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = set_threads(cli.threads.as_deref()).and_then(|_| match cli.command {
        Command::Train(a) => train(a),
        Command::Validate(a) => validate::run(a.run_dir.as_deref(), &a.overrides, a.control.as_deref()),
        Command::Plot { run_dir } => artifacts::render_plots(&run_dir).map(|files| {
            for f in files {
                println!("{}", f.display());
            }
        }),
        Command::Export(a) => artifacts::export(&a.run_dir, a.out.as_deref(), a.nt, a.nx).map(|files| {
            for f in files {
                println!("{}", f.display());
            }
        }),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn set_threads(value: Option<&str>) -> CliResult<()> {
    let Some(raw) = value else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::config(format!("CTRLPINN_THREADS must be a positive integer, got {raw:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

/// Loads the config named by `--config` (or `fallback`) and applies the
/// command-line overrides.
fn resolve_config(o: &Overrides, fallback: Option<&Path>) -> CliResult<RunConfig> {
    let path = o
        .config
        .as_deref()
        .or(fallback)
        .ok_or_else(|| Failure::config("no configuration given (use --config FILE)"))?;
    if !path.exists() {
        return Err(Failure::config(format!("config file {} not found", path.display())));
    }
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = o.seed {
        cfg.train.seed = s;
    }
    if o.long {
        cfg.train.epochs = cfg.long_epochs;
    }
    if let Some(e) = o.epochs {
        cfg.train.epochs = e;
    }
    if let Some(d) = o.diffusivity {
        cfg.set_diffusivity(d)?;
    }
    if let Some(out) = &o.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn train(a: TrainArgs) -> CliResult<()> {
    let cfg = resolve_config(&a.overrides, a.config_file.as_deref())?;
    let problem = cfg.build_problem()?;
    let resume = a.resume.as_deref().map(Checkpoint::load).transpose()?;
    let dir = cfg.out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Failure::input(format!("creating {}: {e}", dir.display())))?;
    let text = cfg.to_toml()?;
    std::fs::write(dir.join("config.toml"), text).map_err(|e| Failure::input(format!("writing config: {e}")))?;
    eprintln!(
        "training {} for {} epochs into {}",
        problem.name(),
        cfg.train.epochs,
        dir.display()
    );
    let run = trainer::train(&problem, &cfg.train, resume.as_ref(), Some(&dir))?;
    artifacts::write_summary(&dir, &problem, &run)?;
    artifacts::write_fields(&dir, &problem, &run.params, cfg.train.execution)?;
    artifacts::render_plots(&dir)?;
    if let Some(last) = run.rows.last() {
        println!("final loss {:e} after {} rows", last.loss.total, run.rows.len());
    }
    if let Some(p) = &run.final_probe {
        for (n, v) in p.names.iter().zip(&p.values) {
            println!("{n} {v:e}");
        }
    }
    println!("{}", dir.display());
    match run.status {
        RunStatus::Diverged(why) => Err(Failure {
            code: EXIT_DIVERGED,
            message: format!("training diverged: {why}"),
        }),
        _ => Ok(()),
    }
}
