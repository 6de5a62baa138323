use thiserror::Error;

/// Failure modes shared by every stage of the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contrast equals -1: the corner problem is degenerate")]
    DegenerateContrast,
    #[error("contrast {kappa} lies outside the open critical interval: no black-hole wave")]
    NoBlackHole { kappa: f64 },
    #[error("root finding failed: {0}")]
    RootFinding(String),
    #[error("empty admissible PML angle interval: {0}")]
    EmptyAdmissibleInterval(String),
    #[error("stretch angle is zero: the absorbing layer would be infinitely long")]
    InfiniteLayer,
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("linear solver error: {0}")]
    Solver(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
