use thiserror::Error;

/// Errors raised by the solvers and model constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("k = 0 cannot cover {0} points")]
    NoCover(usize),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("precondition violated: {0}")]
    Contract(String),
    #[error("LP solver failure: {0}")]
    Solver(String),
    #[error("size budget exceeded: {0}")]
    SizeBudget(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error(
        "{loose} loose vertices on a tree of height {height}; the fractional solution is not a \
         vertex, re-solve the RMFC-T LP for a basic solution"
    )]
    NonBasic { loose: usize, height: usize },
    #[error("points left uncovered: {0:?}")]
    Uncovered(Vec<usize>),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
