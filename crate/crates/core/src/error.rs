use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    /// Malformed argument: empty vector, non-finite entry, bad parameter.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A matrix required to be positive semidefinite is not.
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e} below -{threshold:e})")]
    NotPsd { min_eigenvalue: f64, threshold: f64 },

    #[error("transform has rank {rank}, at least {required} required")]
    RankDeficient { rank: usize, required: usize },

    /// Enumeration size above the configured cap.
    #[error("n = {n} exceeds the enumeration cap {cap}")]
    Capacity { n: usize, cap: usize },

    /// The requested quantity is constant or undefined for this input.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("density generator cannot be normalised: {0}")]
    Normalization(String),

    /// The models do not satisfy the structural hypotheses of the comparison.
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    /// The requested operation is not defined for this family.
    #[error("not applicable: {0}")]
    Inapplicable(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
