use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cluster is empty")]
    EmptyInput,

    #[error("center {center} received no points at iteration {iteration}")]
    EmptyCluster { iteration: usize, center: usize },

    #[error("invalid expansion spacing {spacing:e}: must be positive and at most {limit:e}")]
    InvalidSpacing { spacing: f64, limit: f64 },

    #[error("non-positive radicand {value:e} while computing {quantity}")]
    NegativeRadicand { quantity: &'static str, value: f64 },

    #[error("epsilon upper bound {value:e} is not positive; parameters admit no valid epsilon")]
    NonPositiveBound { value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid gadget weights: {0}")]
    InvalidWeights(String),

    #[error("data-point seeding did not reach the morning clustering: {0}")]
    VariantUnreachable(String),

    #[error("non-finite value produced at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("verification failed at iteration {iteration}, gadget {gadget}: {reason}")]
    VerificationFailure {
        iteration: usize,
        gadget: usize,
        reason: String,
    },

    #[error("validation check `{check}` failed with margin {margin:e}")]
    ValidationFailure { check: String, margin: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status: 2 for I/O and format problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Format(_) => 2,
            _ => 1,
        }
    }
}
