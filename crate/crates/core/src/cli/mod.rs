//! Batch front end: configuration, experiment orchestration and output files.
//!
//! Every command validates its whole configuration before it writes anything,
//! and every output file is written atomically.

mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

pub use commands::{
    cmd_barrier, cmd_barycenter, cmd_diagnose, cmd_ground_state, cmd_staircase, cmd_theta, reference_level,
};
pub use config::RunConfig;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    GroundState,
    Theta,
    Staircase,
    Barrier,
    Barycenter { field: PathBuf },
    Diagnose { field: PathBuf, reference: Option<PathBuf> },
}

/// One command plus the global flags.
#[derive(Clone, Debug, Default)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed_field: Option<PathBuf>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STAGNATION: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;
pub const EXIT_IO: i32 = 5;
pub const EXIT_DEGENERATE: i32 = 6;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Extent(_) | Error::Window(_) | Error::Shape(_) => {
            EXIT_CONFIG
        }
        Error::Stagnation { .. } | Error::Solver { .. } | Error::ConstraintDrift { .. } => EXIT_STAGNATION,
        Error::Assertion(_) => EXIT_ASSERTION,
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
        Error::DegenerateInput(_) => EXIT_DEGENERATE,
    }
}

/// Loads the configuration named by `inv` (defaults when absent) and applies
/// the flag overrides.
pub fn resolve_config(inv: &Invocation) -> Result<RunConfig> {
    let mut cfg = match &inv.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &inv.out {
        cfg.out = out.clone();
    }
    if let Some(j) = inv.jobs {
        cfg.jobs = j;
    }
    if let Some(s) = &inv.seed_field {
        if !s.is_file() {
            return Err(Error::Config(format!("seed field {} does not exist", s.display())));
        }
    }
    Ok(cfg)
}

/// Runs one command, writing its report to `stdout`.
pub fn run(cmd: &Command, inv: &Invocation, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(inv)?;
    let seed = inv.seed_field.as_deref();
    match cmd {
        Command::GroundState => cmd_ground_state(&cfg, seed, stdout),
        Command::Theta => cmd_theta(&cfg, stdout),
        Command::Staircase => cmd_staircase(&cfg, seed, stdout),
        Command::Barrier => cmd_barrier(&cfg, seed, stdout),
        Command::Barycenter { field } => cmd_barycenter(&cfg, field, stdout),
        Command::Diagnose { field, reference } => cmd_diagnose(&cfg, field, reference.as_deref(), stdout),
    }
}
