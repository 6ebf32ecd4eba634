use thiserror::Error;

/// Errors raised by the library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidPmf(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("divergence undefined: p[{index}] = {p} > 0 but q[{index}] = 0")]
    SupportViolation { index: usize, p: f64 },

    #[error("rho = {0} is outside [0, 1]")]
    RhoOutOfRange(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("delay {d} is outside [-{n}, {n}]")]
    DelayOutOfRange { d: i64, n: usize },

    #[error("enumeration budget exceeded: {what} needs {needed} items, limit is {limit}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("no slack: rate pair is not strictly inside the region (min slack {0})")]
    NoSlack(f64),

    #[error("reference distribution is not a member of the source class")]
    NotInClass,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
