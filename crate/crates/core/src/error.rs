use thiserror::Error;

/// Errors raised by the fusion-spectra pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// The model or experiment description violates an invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data is malformed (non-finite entries, wrong shapes, missing parts).
    #[error("input error: {0}")]
    Input(String),

    /// A scalar parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The requested comparison does not apply to this SNR regime.
    #[error("regime error: {0}")]
    Regime(String),

    /// A dense factorisation failed. Singular values are attached when they
    /// were computed before the failure.
    #[error("numerical error: {message}")]
    Numerical {
        message: String,
        partial_singular_values: Option<Vec<f64>>,
    },

    /// The subordination solver failed at too many grid points.
    #[error("solver error: {failed} of {total} grid points did not converge (max residual {max_residual:.3e})")]
    Solver {
        failed: usize,
        total: usize,
        max_residual: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>) -> Self {
        Error::Numerical {
            message: message.into(),
            partial_singular_values: None,
        }
    }

    /// True for errors caused by the caller's configuration rather than numerics.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Input(_) | Error::Parameter(_) | Error::Regime(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
