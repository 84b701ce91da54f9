//! Error types shared by the whole crate.
//!
//! The CLI maps every variant to a stable error code string (see
//! [`Error::code`]); mathematical failure states exit with code 1, usage
//! and parse problems with code 2.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("p fails trial-division primality")]
    NotPrime,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("element is not a unit (positive valuation)")]
    NonUnit,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operands belong to different rings")]
    RingMismatch,
    #[error("image/kernel chains failed to stabilize (internal)")]
    NoStabilization,
    #[error("not an extension: {0}")]
    NotAnExtension(String),
    #[error("vector is not killed by both F and V mod p")]
    NotAlphaP,
    #[error("lattice is not stable under F and V")]
    NotStable,
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("p^-r V^s is not integral on this module")]
    NotIntegral,
    #[error("module is not completely slope divisible: {0}")]
    NotCsd(String),
    #[error("module is not isoclinic")]
    NotIsoclinic,
    #[error("descent failed: fixed lattice has deficient rank (internal)")]
    DescentFailed,
    #[error("enumeration exceeded the candidate cap")]
    BudgetExceeded,
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable code, used in CLI JSON error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotPrime => "NotPrime",
            Error::InvalidParams(_) => "InvalidParams",
            Error::NonUnit => "NonUnit",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::RingMismatch => "RingMismatch",
            Error::NoStabilization => "NoStabilization",
            Error::NotAnExtension(_) => "NotAnExtension",
            Error::NotAlphaP => "NotAlphaP",
            Error::NotStable => "NotStable",
            Error::PrecisionExhausted(_) => "PrecisionExhausted",
            Error::InsufficientPrecision(_) => "InsufficientPrecision",
            Error::NotIntegral => "NotIntegral",
            Error::NotCsd(_) => "NotCSD",
            Error::NotIsoclinic => "NotIsoclinic",
            Error::DescentFailed => "DescentFailed",
            Error::BudgetExceeded => "BudgetExceeded",
            Error::Parse(_) => "Parse",
        }
    }

    /// True for usage/parse errors (CLI exit 2), false for mathematical
    /// failure states (CLI exit 1).
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Parse(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
