//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A vertex or landmark index does not exist in the addressed mesh.
    #[error("vertex index {index} out of range for mesh of {len} vertices")]
    IndexOutOfRange { index: usize, len: usize },

    /// A value violated an operation precondition (non-finite input, empty
    /// signal, mismatched lengths, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration value violated its invariant.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Geometry collapsed below the resolvable threshold (e.g. zero eye
    /// width under eye-width normalization).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A probe whose reference displacements coincide cannot produce an
    /// activation.
    #[error("degenerate probe: d_neutral and d_activated are both {value}")]
    DegenerateProbe { value: f64 },
}
