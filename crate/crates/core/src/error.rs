//! Error types shared by every layer of the library.
//!
//! Numerical guards fail loudly: any parameter combination that would divide
//! by a theta value indistinguishable from zero is reported as
//! [`Error::DegenerateParameter`] with the offending bracket named, never
//! silently regularized.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A series or infinite product failed to reach the requested tolerance
    /// within its term cap.
    #[error("series did not converge within {max_terms} terms (last relative term {last_rel:.3e})")]
    NonConvergence { max_terms: usize, last_rel: f64 },

    /// The elliptic context itself is unusable (nome on or outside the unit
    /// circle, nonpositive tolerance, term cap out of range).
    #[error("invalid elliptic context: {0}")]
    InvalidContext(String),

    /// A genericity guard rejected the parameters; the message names the
    /// bracket whose magnitude fell below the guard threshold.
    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    /// Interpolation nodes collide (some denominator bracket is numerically
    /// zero), so the node system is singular.
    #[error("degenerate interpolation nodes: {0}")]
    DegenerateNodes(String),

    /// The requested contour radius would enclose more than the single
    /// intended simple pole per loop.
    #[error("contour too large: {0}")]
    ContourTooLarge(String),

    /// The requested system size is outside the range an evaluation route
    /// supports.
    #[error("unsupported system size: {0}")]
    UnsupportedSize(String),

    /// A route name was not found in the registry.
    #[error("unknown route: {0}")]
    UnknownRoute(String),

    /// Input slices disagree in length with the declared system size.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
