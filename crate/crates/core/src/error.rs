use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("singular matrix (determinant is zero)")]
    SingularMatrix,
    #[error("polynomial contains D but no numeric value for D was supplied")]
    SymbolicD,
    #[error("zero eigenvalue in scalar solve without opt-in")]
    ZeroEigenvalue,
    #[error("missing coefficient history: need X_{needed}, have up to X_{have}")]
    MissingHistory { needed: i64, have: i64 },
    #[error("consistency failure at m={m}: {detail}")]
    Consistency { m: i64, detail: String },
    #[error("symbolic D generation requested up to m={requested}, cap is {cap}")]
    SymbolicCapExceeded { requested: i64, cap: i64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("step rejected: |h|={h:.3e} exceeds trust radius {radius:.3e}")]
    StepRejected { h: f64, radius: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
