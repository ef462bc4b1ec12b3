use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A computation was asked to go past a configured size guard.
    #[error("{what} = {requested} exceeds the configured cap {cap} ({estimate})")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
        estimate: String,
    },

    #[error("coefficient c_{index} is zero but appears in a denominator")]
    ZeroCoefficient { index: usize },

    #[error("operation requires a geometric coefficient sequence")]
    NotGeometric,

    #[error("operation requires real coefficients")]
    NotReal,

    #[error("operator is not an orthogonal projection: {0}")]
    NotProjection(String),

    #[error("requested tolerance {tol:e} is unachievable: {reason}")]
    Unachievable { tol: f64, reason: String },
}
