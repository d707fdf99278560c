//! `fedmining`: key ceremony, simulation runs, and overhead reports over
//! the secure-aggregation library.
//!
//! Exit codes: 0 success, 2 config validation failure, 3 runtime abort.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fedmining_core::{Bls381, PairingSuite, Toy61};

/// Secure-aggregation federated learning at desk scale.
#[derive(Debug, Parser)]
#[command(name = "fedmining", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a fully commented run-config template.
    Init {
        /// Where to write the template.
        #[arg(long, default_value = "fedmining.toml")]
        out: PathBuf,
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Run the key ceremony and persist key files plus fingerprints.
    Keygen {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the key files.
        #[arg(long, default_value = "keys")]
        out_dir: PathBuf,
        /// Pin all entropy (overrides the config seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Use the brute-forceable small-prime suite instead of BLS12-381.
        #[arg(long)]
        toy_field: bool,
    },
    /// Execute a training run and write a self-contained run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run directory; default runs/run-<seed>.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Pin all entropy (overrides the config seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Use the brute-forceable small-prime suite instead of BLS12-381.
        #[arg(long)]
        toy_field: bool,
        /// Override the number of rounds.
        #[arg(long)]
        rounds: Option<u64>,
        /// Override the pipeline: encrypted | plaintext | both.
        #[arg(long)]
        pipeline: Option<String>,
        /// Override the staleness tolerance gamma.
        #[arg(long)]
        gamma: Option<u64>,
        /// Override the weighting mode: balanced | size-only.
        #[arg(long)]
        weighting: Option<String>,
        /// Override the decrypt route: pairing | fast-no-pairing.
        #[arg(long)]
        decrypt_path: Option<String>,
    },
    /// Print the overhead comparison table, either for a finished run
    /// directory or for a given parameter count.
    Report {
        /// A directory produced by `run`; reproduces its stored table.
        #[arg(long, conflicts_with = "param_count")]
        run_dir: Option<PathBuf>,
        /// Compute the table for this many model parameters.
        #[arg(long)]
        param_count: Option<u64>,
        /// Per-element bytes of the published accounting convention.
        #[arg(long, default_value_t = 56)]
        element_bytes: u64,
        /// Chunk dimension assumed for the measured convention.
        #[arg(long, default_value_t = 16)]
        chunk_dim: usize,
        /// Parameters per timing measurement.
        #[arg(long, default_value_t = 1024)]
        timing_params: usize,
        /// Paillier modulus size for the timing comparison.
        #[arg(long, default_value_t = 2048)]
        paillier_bits: u64,
        /// Skip the live timing measurement (cost model only).
        #[arg(long)]
        skip_timing: bool,
        /// Time the toy suite instead of BLS12-381 (not meaningful as a
        /// security comparison; plumbing checks only).
        #[arg(long)]
        toy_field: bool,
    },
}

/// Errors carrying their process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit code 2: the config (or CLI argument combination) is invalid.
    Validation(String),
    /// Exit code 3: the run itself failed.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Runtime(msg) => write!(f, "run aborted: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Init { out, force } => commands::init::run(&out, force),
        Command::Keygen {
            config,
            out_dir,
            seed,
            toy_field,
        } => {
            let cfg = config::load(&config, seed, &config::Overrides::default())?;
            if toy_field {
                commands::keygen::run::<Toy61>(&cfg, &out_dir)
            } else {
                commands::keygen::run::<Bls381>(&cfg, &out_dir)
            }
        }
        Command::Run {
            config,
            out_dir,
            seed,
            toy_field,
            rounds,
            pipeline,
            gamma,
            weighting,
            decrypt_path,
        } => {
            let overrides = config::Overrides {
                rounds,
                pipeline,
                gamma,
                weighting,
                decrypt_path,
            };
            let cfg = config::load(&config, seed, &overrides)?;
            if toy_field {
                commands::run::run::<Toy61>(&cfg, out_dir.as_deref(), true)
            } else {
                commands::run::run::<Bls381>(&cfg, out_dir.as_deref(), false)
            }
        }
        Command::Report {
            run_dir,
            param_count,
            element_bytes,
            chunk_dim,
            timing_params,
            paillier_bits,
            skip_timing,
            toy_field,
        } => match (run_dir, param_count) {
            (Some(dir), None) => commands::report::from_run_dir(&dir),
            (None, Some(params)) => {
                let opts = commands::report::LiveOptions {
                    param_count: params,
                    element_bytes,
                    chunk_dim,
                    timing_params,
                    paillier_bits,
                    measure_timing: !skip_timing,
                };
                if toy_field {
                    commands::report::live::<Toy61>(&opts)
                } else {
                    commands::report::live::<Bls381>(&opts)
                }
            }
            _ => Err(CliError::Validation(
                "report needs exactly one of --run-dir or --param-count".into(),
            )),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Validation(_) => ExitCode::from(2),
                CliError::Runtime(_) => ExitCode::from(3),
            }
        }
    }
}

/// Suite-independent helper: resolve which suite name a flag selects.
pub fn suite_name(toy_field: bool) -> &'static str {
    if toy_field {
        Toy61::NAME
    } else {
        Bls381::NAME
    }
}
