//! Error types shared across the simulator.

use thiserror::Error;

/// Errors produced by domain construction, solvers, analysis and the
/// sensitivity toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty domain")]
    EmptyDomain,

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("nonpositive diffusion at cell {cell}")]
    NonpositiveDiffusion { cell: usize },

    #[error("field length {got} does not match domain cell count {expected}")]
    FieldLength { got: usize, expected: usize },

    #[error("reaction solver diverged at cell {cell} (residual {residual:.3e})")]
    ReactionDiverged { cell: usize, residual: f64 },

    #[error("diffusion solve failed: {0}")]
    DiffusionSolveFailed(String),

    #[error("eigensolver did not converge after {0} iterations")]
    EigenDidNotConverge(usize),

    #[error("cannot log-fit: {0}")]
    CannotLogFit(String),

    #[error("design shape error: {0}")]
    DesignShape(String),

    #[error("degenerate variance")]
    DegenerateVariance,

    #[error("transect point outside domain at index {0}")]
    TransectOutsideDomain(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("simulation failed at t = {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wrap an error with the simulation time at which it occurred.
    pub fn at_time(self, time: f64) -> Error {
        Error::AtTime {
            time,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
