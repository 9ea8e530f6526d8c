use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("eigen-solver did not converge (non-finite or defective input)")]
    EigenNonConvergence,
    #[error("matrix dimension {0} outside supported range 2..=8")]
    Dimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("curvature level must be positive, got {0}")]
    NonPositiveLevel(f64),
    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("angle {theta} outside the admissible range for n = {n}")]
    AngleOutOfRange { n: usize, theta: f64 },
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid graph function: {0}")]
    Graph(String),
    #[error("degenerate induced metric at node {0}")]
    DegenerateMetric(usize),
    #[error("node {0} is not admissible (shape operator not positive definite)")]
    Inadmissible(usize),
    #[error("graph functions live on different grids")]
    GridMismatch,
    #[error("umbilic level {0} outside [0, 1]")]
    CapLevel(f64),
    #[error("invalid mollifier: {0}")]
    Mollifier(String),
    #[error("ordering precondition violated at node {node}: f_out - f_in = {gap:e}")]
    Ordering { node: usize, gap: f64 },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
