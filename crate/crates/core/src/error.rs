//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by simulation and despeckling routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation
    /// (e.g. a non-positive wavenumber).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value is structurally invalid (bad bin counts,
    /// non-positive looks, mismatched parameter sets).
    #[error("configuration error: {0}")]
    Config(String),

    /// Two gridded quantities that must share a `GridSpec` do not.
    #[error("grid mismatch: expected {expected_nx}x{expected_ny}, got {got_nx}x{got_ny}")]
    GridMismatch {
        expected_nx: usize,
        expected_ny: usize,
        got_nx: usize,
        got_ny: usize,
    },

    /// A numerical procedure failed to converge or produced a non-finite
    /// value; the message carries the offending coordinates or state.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A structured container (e.g. a subband pyramid) is malformed.
    #[error("structural error: {0}")]
    Structural(String),
}

pub type Result<T> = std::result::Result<T, Error>;
