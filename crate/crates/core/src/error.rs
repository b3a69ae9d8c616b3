//! Error type shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated (negative bandwidth,
    /// non-finite input, index out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The Legendre coefficient tail of a prolate mode did not decay below
    /// tolerance, so the basis truncation is too small for the requested mode.
    #[error(
        "Legendre tail of mode {mode} has not converged (relative tail {tail:.3e} at truncation {m_legendre}); increase m_legendre"
    )]
    LegendreTail {
        mode: usize,
        tail: f64,
        m_legendre: usize,
    },

    /// A basis was built for a different bandwidth-time product than the
    /// window it is being used with.
    #[error("basis bandwidth-time product c={basis_c} does not match window c={window_c}")]
    BasisWindowMismatch { basis_c: f64, window_c: f64 },

    /// Too few samples for the requested operation.
    #[error("{context}: need at least {required} samples, got {got}")]
    InsufficientSamples {
        required: usize,
        got: usize,
        context: String,
    },

    /// A sample grid that must be uniform (at a specific spacing) is not.
    #[error("{0}")]
    BadGrid(String),

    /// Samples do not cover the time interval an operation needs.
    #[error("{context}: samples cover [{t_first}, {t_last}] but +-{half_span} is required")]
    Coverage {
        half_span: f64,
        t_first: f64,
        t_last: f64,
        context: String,
    },

    /// A matrix that must be Hermitian is not, beyond tolerance.
    #[error("{context}: matrix deviates from Hermitian by {deviation:.3e} (relative)")]
    NonHermitian { deviation: f64, context: String },

    /// A dense linear-algebra routine failed (factorization breakdown,
    /// non-convergence), with whatever conditioning detail is available.
    #[error("linear algebra failure: {0}")]
    Linalg(String),

    /// An internal numerical consistency check failed.
    #[error("internal numerical check failed: {0}")]
    Numeric(String),

    /// Malformed input file contents.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
