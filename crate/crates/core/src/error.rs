use thiserror::Error;

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Parameters are individually valid but jointly produce a probability above 1.
    #[error("inconsistent parameters: derived probability {value} exceeds 1")]
    InconsistentProbability { value: f64 },

    /// The per-attempt success probability is zero, so no finite budget reaches the target.
    #[error("failure target {eps} is unreachable with zero success probability")]
    UnreachableTarget { eps: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("level {label} not found or mixed beyond the labelling threshold")]
    LabelNotFound { label: String },

    #[error("empty range: {0}")]
    EmptyRange(&'static str),

    #[error("layout mismatch: expected {expected}")]
    LayoutMismatch { expected: &'static str },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
