use thiserror::Error;

/// Errors raised by the density solvers and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DtqError {
    #[error("problem `{0}` has no closed-form density")]
    MissingExactDensity(String),

    #[error("diffusion vanishes at x = {0}")]
    ZeroDiffusion(f64),

    #[error("diffusion vanishes at grid node j = {0}")]
    ZeroDiffusionAtNode(i64),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("tridiagonal factorization broke down at row {0}")]
    SingularTridiagonal(usize),

    #[error("degenerate least-squares fit: {0}")]
    DegenerateFit(String),

    #[error("unknown problem `{name}`; valid names: {}", valid.join(", "))]
    UnknownProblem { name: String, valid: Vec<String> },
}

pub type Result<T> = std::result::Result<T, DtqError>;
