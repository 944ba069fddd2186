use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The even/odd profile system is singular at y = 0 and y = 1.
    #[error("right-hand side evaluated at singular point y = {y}")]
    SingularPoint { y: f64 },

    /// Adaptive integration stopped before covering the requested interval.
    #[error("integration failed: reached [{reached_lo}, {reached_hi}] ({reason})")]
    ConvergenceFailure {
        reached_lo: f64,
        reached_hi: f64,
        reason: String,
    },

    #[error("no self-similar branch for k0 = {k0} (no solutions expected for k0 < 2)")]
    NoBranch { k0: f64 },

    #[error("bracket search failed on G(1/2) in [{lo}, {hi}]: {detail}")]
    BracketFailure { lo: f64, hi: f64, detail: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Number density vanished or became non-finite.
    #[error("degenerate state at step {step}: N = {number}")]
    Degenerate { step: usize, number: f64 },

    #[error("Picard iteration did not converge after {} iterations (last residual {:e})", residuals.len(), residuals.last().copied().unwrap_or(f64::NAN))]
    NonConvergence { residuals: Vec<f64> },

    #[error("profiles have disjoint supports")]
    DisjointSupport,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
