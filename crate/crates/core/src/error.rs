use thiserror::Error;

/// Which side of an admissible interval was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

impl std::fmt::Display for Extremum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extremum::Min => f.write_str("minimum"),
            Extremum::Max => f.write_str("maximum"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("dyadic index {index} outside [{min}, {max}]")]
    IndexOutOfRange { index: i32, min: i32, max: i32 },
    #[error("field `{0}` contains non-finite values")]
    NonFinite(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("operation requires dimension {expected}, grid has {found}")]
    Dimension { expected: usize, found: usize },
    #[error("{quantity} {extremum} {value} outside admissible bound {bound}")]
    Bound {
        quantity: String,
        extremum: Extremum,
        value: f64,
        bound: f64,
    },
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("time step {dt:e} exceeds CFL limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("numerical instability: {0}")]
    Stability(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("Picard iteration failed to contract after {iterations} iterates (last ratio {last_ratio})")]
    Divergence {
        iterations: usize,
        last_ratio: f64,
        trace: Box<crate::solver::PicardTrace>,
    },
    #[error("snapshot format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
