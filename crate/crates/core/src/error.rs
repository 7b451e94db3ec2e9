use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("geometry exceeds grid extents: {0}")]
    Extent(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("constraint drift: |u|_p = {lp_norm} (allowed deviation {tolerance})")]
    ConstraintDrift { lp_norm: f64, tolerance: f64 },

    #[error("linear solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    Solver { iterations: usize, residual: f64 },

    #[error("flow stagnated at iter {iter}: dt fell below {dt_min:e} without descent (energy {energy}, pg_norm {pg_norm:.3e})")]
    Stagnation {
        iter: usize,
        dt_min: f64,
        energy: f64,
        pg_norm: f64,
    },

    #[error("fit window error: {0}")]
    Window(String),

    #[error("malformed field file {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("check failed: {0}")]
    Assertion(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
