use thiserror::Error;

/// Errors raised by geometry, chart, and optimizer operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    /// An input broke an operation's precondition (wrong shape, wrong base point, off-manifold).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The operation is undefined for these inputs (antipodal log, point outside a chart box).
    #[error("domain error: {0}")]
    Domain(String),

    /// A floating-point computation produced an unusable result (singular matrix, NaN).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A post-operation correction exceeded its allowed magnitude.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    /// A chart's metric function returned a non-SPD matrix or a pointwise scale ≤ 0.
    #[error("invalid chart: {0}")]
    InvalidChart(String),

    /// Input data does not identify the requested quantity.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid scale factor {0}: must be finite and > 0")]
    InvalidScale(f64),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
