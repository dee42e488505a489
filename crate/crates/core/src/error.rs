use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: max |a_jk - conj(a_kj)| = {asymmetry:e}")]
    NonHermitian { asymmetry: f64 },

    #[error("matrix is not unitary: max |U U^† - I| = {deviation:e}")]
    NonUnitary { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid dimension {0}: must be a power of two between 2 and 16")]
    InvalidDimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular weight system: {diagnostics}")]
    SingularSystem { diagnostics: String },

    #[error("every candidate ground state yields a vanishing pure-part coefficient")]
    DegenerateInputs,

    #[error("peak windows overlap or fall outside the spectral window: {0}")]
    ResolutionTooCoarse(String),

    #[error("peak data inconsistent with a diagonal state: residual {residual:e} exceeds {limit:e}")]
    InconsistentPeaks { residual: f64, limit: f64 },

    #[error("zero reference: {0}")]
    ZeroReference(&'static str),

    #[error("decoded answer is ambiguous: {0}")]
    AmbiguousDecode(String),

    #[error(transparent)]
    Csv(#[from] CsvError),
}

/// Wrapper so [`Error`] stays `Clone + PartialEq`.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("csv export failed: {0}")]
pub struct CsvError(pub String);

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(CsvError(e.to_string()))
    }
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the labeling linear algebra.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::SingularSystem { .. } | Error::DegenerateInputs)
    }
}
