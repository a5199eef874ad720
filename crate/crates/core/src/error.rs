use thiserror::Error;

/// Errors produced by the decomposition, certification and IO routines.
#[derive(Debug, Error)]
pub enum PcpError {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// An iterative method hit its iteration cap. `best_estimate` is the last iterate's value.
    #[error("{what} did not converge after {iterations} iterations (best estimate {best_estimate})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        best_estimate: f64,
    },

    #[error("Neumann series diverges: ||P_Omega P_T|| = {norm} >= 1")]
    SeriesDiverges { norm: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = PcpError> = std::result::Result<T, E>;
