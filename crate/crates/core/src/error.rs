use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point is not strictly interior to the cone (block {block})")]
    Boundary { block: usize },
    #[error("non-positive pivot {pivot:e} at row {row} during Cholesky factorization")]
    Factorization { row: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("capped CG called with a zero right-hand side")]
    ZeroGradient,
    #[error("zero direction")]
    ZeroDirection,
    #[error("capped CG exceeded its hard iteration cap of {0}")]
    HardCapExceeded(usize),
    #[error("capped CG could not locate a negative-curvature difference of iterates")]
    CurvatureSearchFailed,
    #[error("initial point infeasible: {0}")]
    InfeasibleStart(String),
    #[error("line search failed after {0} backtracks")]
    LineSearchFailure(usize),
    #[error("objective evaluation produced a non-finite value")]
    NonFiniteEvaluation,
    #[error("problem of dimension {n} exceeds the dense limit {limit}")]
    Size { n: usize, limit: usize },
    #[error("scaling does not preserve cone block {0}")]
    ConeMismatch(usize),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
