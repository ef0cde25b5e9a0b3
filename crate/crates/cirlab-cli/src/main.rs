//! `cirlab` — scattering experiments under transverse harmonic
//! confinement from one TOML document per run. Each verb dispatches one
//! experiment, writes CSV artifacts plus a config echo and a run
//! manifest into the output directory, and exits nonzero with a
//! machine-readable error record when anything is refused.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_config, resolve, ExperimentConfig, Mode};

/// Errors surfaced to the shell: parse and validation problems exit 2,
/// runtime failures exit 1, both after printing a TOML error record on
/// stderr.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{key}: {message}")]
    Validation { key: String, message: String },
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// TOML error record printed to stderr and dropped next to partial
/// artifacts: always `error` and `kind`, plus `key` for validation
/// failures.
pub fn error_record(e: &CliError) -> String {
    #[derive(serde::Serialize)]
    struct Record<'a> {
        error: String,
        kind: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        key: Option<&'a str>,
    }
    let (kind, key) = match e {
        CliError::Parse(_) => ("parse", None),
        CliError::Validation { key, .. } => ("validation", Some(key.as_str())),
        CliError::Runtime(_) => ("runtime", None),
        CliError::Io(_) => ("io", None),
    };
    toml::to_string(&Record { error: e.to_string(), kind, key })
        .unwrap_or_else(|_| format!("error = \"{e}\"\n"))
}

#[derive(Parser)]
#[command(
    name = "cirlab",
    version,
    about = "Quasi-1D scattering under transverse harmonic confinement: \
             classical complex-trajectory ensembles and quantum coupled channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// One experiment per verb; all verbs share the same flags.
#[derive(Subcommand)]
enum Command {
    /// Monte Carlo transmission along a swept parameter.
    ClassicalSweep(RunArgs),
    /// Coupled-channel transmission along a swept parameter.
    QuantumSweep(RunArgs),
    /// Free-space deflection angle vs depth (confined winding with `confined = true`).
    FreespaceTheta(RunArgs),
    /// Time-weighted trajectory density on the scattering plane.
    DensityMap(RunArgs),
    /// Transmission statistics vs ensemble size.
    Convergence(RunArgs),
    /// Semiclassical transverse levels next to the closed form.
    BohrSommerfeld(RunArgs),
    /// Zero-energy scattering length vs depth.
    ScatteringLength(RunArgs),
}

/// Shared flags. Environment variables with the CIRLAB_ prefix mirror
/// them; flags win over the environment, which wins over the document.
#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long, env = "CIRLAB_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory for CSV artifacts and the run manifest.
    #[arg(long, env = "CIRLAB_OUT")]
    out: Option<PathBuf>,
    /// Master seed for the per-event RNG streams.
    #[arg(long, env = "CIRLAB_SEED")]
    seed: Option<u64>,
    /// Worker threads for ensemble parallelism (never changes results).
    #[arg(long, env = "CIRLAB_WORKERS")]
    workers: Option<usize>,
}

fn execute(mode: Mode, args: &RunArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Runtime(format!("read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    // Flags (and their CIRLAB_* mirrors) override the document.
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = Some(seed);
    }
    let resolved = resolve(&cfg, mode)?;
    // Stamp the verb so the echoed config restates the whole run.
    cfg.mode = Some(mode);
    run::run_experiment(&cfg, &resolved, args.workers)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::ClassicalSweep(a) => (Mode::ClassicalSweep, a),
        Command::QuantumSweep(a) => (Mode::QuantumSweep, a),
        Command::FreespaceTheta(a) => (Mode::FreespaceTheta, a),
        Command::DensityMap(a) => (Mode::DensityMap, a),
        Command::Convergence(a) => (Mode::Convergence, a),
        Command::BohrSommerfeld(a) => (Mode::BohrSommerfeld, a),
        Command::ScatteringLength(a) => (Mode::ScatteringLength, a),
    };
    match execute(mode, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("{}", error_record(&e));
            match e {
                CliError::Parse(_) | CliError::Validation { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
