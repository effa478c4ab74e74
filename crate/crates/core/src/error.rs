use thiserror::Error;

pub type Result<T, E = DreError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DreError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid ridge penalty {0}: penalties must be finite and strictly positive")]
    InvalidPenalty(f64),

    #[error("invalid IDX file: {0}")]
    Idx(String),

    #[error("class {0} is empty after filtering")]
    EmptyClass(u8),

    #[error("degenerate labels: test labels have zero spread around the training mean")]
    DegenerateLabels,

    #[error("singular gram matrix: penalties #{first} ({first_value}) and #{second} ({second_value}) coincide")]
    SingularGram {
        first: usize,
        second: usize,
        first_value: f64,
        second_value: f64,
    },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("symmetric eigendecomposition did not converge")]
    Decomposition,

    #[error("model file: {0}")]
    Format(String),

    #[error("resource guard: {0}")]
    ResourceLimit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
