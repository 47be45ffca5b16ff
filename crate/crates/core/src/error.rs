use thiserror::Error;

pub type Result<T, E = DlnError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DlnError {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("singular value decomposition failed for input with Frobenius norm {norm:e}")]
    SvdFailure { norm: f64 },

    #[error("degenerate spectrum: sigma_{i}^2 - sigma_{j}^2 = {gap:e} is below tolerance {tol:e}")]
    DegenerateSpectrum {
        i: usize,
        j: usize,
        gap: f64,
        tol: f64,
    },

    #[error("rank collapse: sigma_{index} = {value:e}")]
    RankCollapse { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("mask observes no entries")]
    EmptyMask,

    #[error("degenerate denominator {value:e} in {context}")]
    DegenerateDenominator { context: &'static str, value: f64 },

    #[error("Monte Carlo estimate accepted no samples out of {drawn}")]
    NoAcceptedSamples { drawn: usize },
}

impl DlnError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        DlnError::InvalidParameter(msg.into())
    }
}
