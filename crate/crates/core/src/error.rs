//! Error types shared across the crate.

use thiserror::Error;

/// Failures of context construction and association.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    /// Fewer than two objects: no context can be built.
    #[error("scene too sparse: {objects} object(s), need at least 2")]
    SceneTooSparse { objects: usize },
    /// A side has too few detections for context matching to be meaningful.
    #[error("insufficient context: {side} set has {objects} object(s), need at least 3")]
    InsufficientContext { side: &'static str, objects: usize },
}

/// Failures of the closed-form and robust SE(2) fits.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("degenerate configuration: {effective} effective point(s), need at least 2")]
    TooFewPoints { effective: usize },
    #[error("degenerate configuration: weighted points are coincident")]
    CoincidentPoints,
    #[error("mismatched point lists: {ego} ego vs {coop} cooperative")]
    LengthMismatch { ego: usize, coop: usize },
}

/// Failures of scenario generation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("could not place {requested} objects with min gap {min_gap} m in {width}x{height} m (placed {placed})")]
    PlacementFailed {
        requested: usize,
        placed: usize,
        min_gap: f64,
        width: f64,
        height: f64,
    },
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },
}

/// Failures of frame-file and results persistence.
#[derive(Debug, Error)]
pub enum IoFormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unsupported frame file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("missing header line")]
    MissingHeader,
}
