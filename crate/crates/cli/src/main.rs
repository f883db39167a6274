//! `marchenko-kit` command-line front end.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "marchenko-kit", version, about = "Forward and inverse scattering for the 1D Schrödinger operator")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "MARCHENKO_KIT_THREADS")]
    threads: Option<usize>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Potential JSON {x, v} → scattering table, scattering_data.json, bound_states.json.
    Forward {
        #[serde(skip)]
        input: Option<PathBuf>,
    },
    /// Scattering JSON → potential, kernel and wavefunction tables.
    Invert {
        #[serde(skip)]
        input: Option<PathBuf>,
    },
    /// Transmission from reflection and bound states via the dispersion relation.
    Tmap {
        #[serde(skip)]
        input: Option<PathBuf>,
    },
    /// Functional derivative fields of the reconstructed background.
    Deriv {
        which: DerivKind,
        #[serde(skip)]
        input: Option<PathBuf>,
        /// Momentum of the field; repeat for several slices.
        #[arg(long = "k", required = true)]
        k: Vec<f64>,
        /// Perturbed momentum (dpsi-dr only).
        #[arg(long)]
        q: Option<f64>,
        /// Derivative with respect to r* instead of r (dpsi-dr only).
        #[arg(long)]
        star: bool,
    },
    /// Consistency checks; writes report.json, exits 3 if any check fails.
    Check {
        which: CheckKind,
        #[serde(skip)]
        input: Option<PathBuf>,
    },
    /// Reflectionless data and potential from bound-state parameters.
    Soliton {
        #[arg(long = "kappa", required = true)]
        kappa: Vec<f64>,
        #[arg(long = "c", required = true)]
        c: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivKind {
    DvDr,
    DpsiDr,
    DrDv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Trace,
    Unitarity,
    InverseKernel,
    Orthogonality,
    Roundtrip,
    All,
}

/// An error with its exit code: 2 for bad input, 3 for numerical failure.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<marchenko_kit::Error> for Failure {
    fn from(e: marchenko_kit::Error) -> Self {
        if e.is_input_error() {
            Failure::input(e.to_string())
        } else {
            Failure::numerical(e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::input(format!("cannot set thread count: {e}")))?;
    }
    let mut config = RunConfig::load(cli.config.as_deref())?;
    config.apply(&cli.overrides);
    config.validate()?;
    commands::dispatch(&cli.command, &config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
