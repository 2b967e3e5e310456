//! Stalk diameter estimation from masked RGB-D captures.
//!
//! The pipeline turns a depth image plus a foreground mask into a single
//! diameter estimate:
//!
//! 1. back-project masked depth pixels into a metric point cloud ([`camera`])
//! 2. drop statistical outliers by mean k-NN distance ([`filtering`])
//! 3. recover the stalk axis as the principal component of the cloud ([`axis`])
//! 4. cut the cloud into thin slabs orthogonal to the axis, fit a robust
//!    radius per slab, and aggregate the per-slice diameters ([`slicing`])
//!
//! [`synth`] generates seeded synthetic stalks and renders them to depth
//! images so every stage can be checked against known ground truth, and
//! [`evaluation`] scores predictions and runs component ablations.

pub mod axis;
pub mod camera;
pub mod evaluation;
pub mod filtering;
pub mod imageio;
pub mod ply;
pub mod report;
pub mod rng;
pub mod slicing;
pub mod synth;

/// Crate-wide error type.
///
/// The CLI maps `is_measurement_failure` variants to a distinct exit code so
/// callers can tell unusable samples apart from bad invocations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("empty point cloud: {0}")]
    EmptyCloud(String),
    #[error("too few points: {0}")]
    TooFewPoints(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("no valid slices: {0}")]
    NoValidSlices(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the input files were readable and well-formed but the sample
    /// itself could not be measured (empty cloud, degenerate axis, no usable
    /// slices).
    pub fn is_measurement_failure(&self) -> bool {
        matches!(
            self,
            Error::EmptyCloud(_)
                | Error::TooFewPoints(_)
                | Error::DegenerateGeometry(_)
                | Error::NoValidSlices(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
