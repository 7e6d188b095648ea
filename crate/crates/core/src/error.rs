use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The space description violates a metric or measure axiom.
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("average over an empty ball")]
    EmptyBall,

    /// A smoothness/integrability parameter lies outside the admissible window.
    #[error("parameter out of range: {0}")]
    Parameter(String),

    /// A pair distance falls in an annulus not covered by a gradient sequence.
    #[error("distance {distance} lies in annulus {level}, outside the sequence range [{k_min}, {k_max}]")]
    AnnulusRange {
        distance: f64,
        level: i32,
        k_min: i32,
        k_max: i32,
    },

    #[error("partition of unity normalization failed at point {0}")]
    Normalization(usize),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
