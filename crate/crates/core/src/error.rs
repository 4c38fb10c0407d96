use thiserror::Error;

pub type Result<T> = std::result::Result<T, SwiptError>;

#[derive(Debug, Error)]
pub enum SwiptError {
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    EigenNotConverged { sweeps: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rate requirement {required} bps/Hz exceeds the maximum attainable {max_rate} bps/Hz")]
    InfeasibleRate { required: f64, max_rate: f64 },

    /// The rate cannot be met by a rank-1 transmission; the spatial
    /// multiplexing branch has to be used instead.
    #[error("rate requirement {required} bps/Hz exceeds the energy-beamforming capacity {eb_capacity} bps/Hz")]
    EbInfeasible { required: f64, eb_capacity: f64 },

    #[error("grid oracle supports at most 3 eigenchannels, got {0}")]
    GridTooLarge(usize),

    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SwiptError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SwiptError::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
