use thiserror::Error;

use crate::geometry::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point does not belong to the {expected} model")]
    ModelMismatch { expected: &'static str },
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid isometry: {0}")]
    InvalidIsometry(String),
    #[error("geodesic endpoints coincide")]
    DegenerateGeodesic,
    #[error("radius must be positive and finite, got {0}")]
    NonPositiveRadius(f64),
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("point {point:?} is not wandering: smallest displacement {displacement:e}")]
    NotWandering { point: Point, displacement: f64 },
    #[error("no non-trivial group element found within radius {radius}")]
    InconclusiveMargin { radius: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("action is not free: {element} fixes {point:?}")]
    NotFree { point: Point, element: String },
    #[error("net is empty")]
    EmptyNet,
    #[error("sample stream too small: {point:?} has no net point within {radius}")]
    StreamTooSmall { point: Point, radius: f64 },
    #[error("tile boundaries still occupy {fraction:.4} of the window after {attempts} perturbations")]
    ThinBoundaryUnachieved { fraction: f64, attempts: usize },
    #[error("graph is disconnected: {0}")]
    Disconnected(String),
    #[error("scene error: {0}")]
    Scene(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Malformed input: scenes, points, spaces or generators.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::ModelMismatch { .. }
                | Error::InvalidSpace(_)
                | Error::InvalidPoint(_)
                | Error::InvalidIsometry(_)
                | Error::NonPositiveRadius(_)
                | Error::EmptySample
                | Error::Scene(_)
                | Error::Json(_)
        )
    }

    /// The computation could not reach a verdict either way.
    pub fn is_inconclusive(&self) -> bool {
        matches!(
            self,
            Error::InconclusiveMargin { .. }
                | Error::StreamTooSmall { .. }
                | Error::ThinBoundaryUnachieved { .. }
                | Error::Disconnected(_)
        )
    }
}
