//! Error classes shared by the whole crate.
//!
//! The variants mirror the failure modes of the numerical layers: dimension
//! guards, chart breakdowns on the sphere, insufficient Fock truncation,
//! quadrature/step-size self-checks, input validation and unimplemented
//! capability combinations. Callers that drive experiments map these onto
//! process exit codes (validation errors are reported separately from
//! numerical guard failures).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A requested matrix dimension exceeds the configured maximum.
    #[error("dimension {dim} exceeds the configured maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    /// A spherical or complex chart is evaluated outside its trust region.
    #[error("chart breakdown: {0}")]
    Chart(String),

    /// The Fock truncation cannot represent the requested state. The field
    /// names the smallest truncation that would satisfy the guard.
    #[error("truncation too small: {msg} (required M >= {required_m})")]
    Truncation { msg: String, required_m: usize },

    /// A quadrature self-check failed (window mass or order doubling).
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// A time-stepping self-check failed (norm drift, Richardson check).
    #[error("step-size failure: {0}")]
    Step(String),

    /// Invalid input data (non-unit vectors, non-PSD matrices, bad configs).
    #[error("validation failure: {0}")]
    Validation(String),

    /// A parameter combination outside the supported capability envelope.
    #[error("capability not supported: {0}")]
    Capability(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that indicate bad inputs rather than numerical limits.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::DimensionTooLarge { .. })
    }
}
