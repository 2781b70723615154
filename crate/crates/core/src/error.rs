use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("negative power input: {0}")]
    NegativePower(String),
    #[error("singular interference-plus-noise matrix for UL UE {0}")]
    Singular(usize),
    #[error("zero grid-power denominator")]
    ZeroDenominator,
    #[error("surrogate domain violated: {0}")]
    Domain(String),
    #[error("exponential-cone argument range {range} exceeds what level {level} supports ({max}); raise the level or shrink the range")]
    ExpRange { range: f64, level: u32, max: f64 },
    #[error("invalid conic program: {0}")]
    InvalidProgram(String),
    #[error("expansion point rejected: {0}")]
    BadExpansion(String),
    #[error("instance infeasible: {0}")]
    Infeasible(String),
    #[error("conic solver failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
