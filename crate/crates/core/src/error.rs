use thiserror::Error;

/// Errors produced by the solvers, diagnostics and problem constructors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("iterative scheme `{what}` did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("point is infeasible (constraint violation {violation:.3e})")]
    InfeasiblePoint { violation: f64 },

    #[error("bad parameters: {0}")]
    BadParameters(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample region is degenerate: {0}")]
    DegenerateRegion(String),

    #[error("no samples fell inside the level set (nu = {nu})")]
    NoSamplesInLevelSet { nu: f64 },

    #[error("argument {0} is outside the domain of the closed form")]
    OutOfDomain(f64),

    #[error("simple-path enumeration for OD pair {od} exceeded the cap of {cap} paths")]
    PathEnumerationOverflow { od: usize, cap: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
