use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid rotation target: {0}")]
    InvalidTarget(String),

    /// Continued-fraction digits or orbit positions could not be resolved at
    /// the working precision.
    #[error("precision {prec} bits insufficient: {detail}")]
    PrecisionInsufficient { prec: u32, detail: String },

    /// A tracked distance fell below the guard `2^(32 - prec)`.
    #[error("precision {prec} bits exhausted: distance 2^{log2_dist:.1} below guard")]
    PrecisionExhausted { prec: u32, log2_dist: f64 },

    /// The inverse branch was asked for its value at the critical value. Both
    /// one-sided limits are carried as decimal strings.
    #[error("inverse branch discontinuous at the critical value (left limit {left}, right limit {right})")]
    Discontinuity { left: String, right: String },

    /// An orbit came within the precision guard of the critical value.
    #[error("iterate {index} within the guard of the critical value at {prec} bits")]
    DiscontinuityHit { index: usize, prec: u32 },

    #[error("parameter bisection stalled on a mode-locking plateau at {prec} bits after {steps} steps")]
    PlateauStall { prec: u32, steps: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("index misalignment: {0}")]
    Misaligned(String),

    #[error("missing geometry: {0}")]
    MissingGeometry(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant failed (never expected in correct operation).
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Errors that are cured by re-running at a higher precision.
    pub fn wants_more_precision(&self) -> bool {
        matches!(
            self,
            Error::PrecisionInsufficient { .. }
                | Error::PrecisionExhausted { .. }
                | Error::DiscontinuityHit { .. }
                | Error::PlateauStall { .. }
        )
    }
}
