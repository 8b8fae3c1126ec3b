use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} exceeds the tabulated range k_max = {k_max}")]
    IndexOutOfRange { index: usize, k_max: usize },

    #[error("insufficient range: need K >= {min}, got {got}")]
    InsufficientRange { min: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("derivative order {order} exceeds max_order {max_order} of `{name}`")]
    OrderOverflow {
        name: String,
        order: usize,
        max_order: usize,
    },

    #[error("point {point:?} lies outside the domain of `{name}`")]
    OutsideDomain { name: String, point: Vec<f64> },

    #[error("|v| = {v_abs:.6e} is outside the working radius delta = {delta:.6e}")]
    OutOfWorkingRadius { v_abs: f64, delta: f64 },

    #[error("covector outside the cone |Im zeta| < |Re zeta|")]
    OutsideCone,

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("growth certificate violated: {0}")]
    GrowthViolation(String),

    #[error("missing well-positioned certificate for chart `{0}`")]
    MissingCertificate(String),

    #[error("ladder too short: need at least {min} rungs, got {got}")]
    ShortLadder { min: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("solution rejected: residual {residual:.3e} exceeds {limit:.3e}")]
    InadmissibleSolution { residual: f64, limit: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
