//! Error types shared across the crate.
//!
//! "unknown" outcomes of semi-decision procedures are *not* errors; they are
//! ordinary values (see [`crate::fuel::Starved`]). Errors here mean the input
//! itself was unusable.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRatError {
    #[error("empty rational literal")]
    Empty,
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("invalid integer part `{0}`")]
    BadInteger(String),
    #[error("invalid decimal literal `{0}`")]
    BadDecimal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("evaluation time {t} outside [0;1]")]
    TimeOutOfDomain { t: String },
    #[error("corner value mismatch at {which}: expected {expected}, enclosure around {got}")]
    CornerMismatch {
        which: &'static str,
        expected: String,
        got: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InputError {
    #[error("{path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error("{0}")]
    Rat(#[from] ParseRatError),
    #[error("{0}")]
    Path(#[from] PathError),
}

/// Raised when a gate's two stay-interval endpoint images provably collapse
/// onto each other: the enclosures overlap and keep shrinking together, so no
/// separation radius can exist. Surfaced rather than mishandled.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("degenerate gate: endpoint image enclosures overlap below {scale}")]
pub struct DegenerateGate {
    pub scale: String,
}
