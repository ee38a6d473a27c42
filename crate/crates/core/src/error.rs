use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("invalid parameter {name} = {value}: must lie strictly inside (0, 1)")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("cell {cell} outside window [{jmin}, {jmax}]")]
    OutsideWindow { cell: i64, jmin: i64, jmax: i64 },

    #[error("window overflow: amplitude reached boundary cell {cell} of window [{jmin}, {jmax}]; use a larger window")]
    WindowOverflow { cell: i64, jmin: i64, jmax: i64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{what} did not converge after {iterations} iterations (last change {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("numerical consistency check failed: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, WalkError>;
