use thiserror::Error;

pub type Result<T, E = MhError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MhError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("point {point:?} is outside the usable domain (needs a {margin}-cell margin)")]
    OutOfDomain { point: Vec<f64>, margin: usize },
    #[error("metric is not symmetric positive definite: {0}")]
    InvalidMetric(String),
    #[error("closed set is empty")]
    EmptySet,
    #[error("search exhausted after {tried} candidates")]
    SearchExhausted { tried: usize },
    #[error("gradient norm {norm} is too small for a level-set normal")]
    DegenerateGradient { norm: f64 },
    #[error("point {point:?} lies outside the declared smooth band (|u| = {distance}, band = {band})")]
    OutsideSmoothBand {
        point: Vec<f64>,
        distance: f64,
        band: f64,
    },
    #[error("no touching points between the set and the region boundary")]
    NoContact,
    #[error("curvature blow-up at distance {at}")]
    CurvatureBlowup { at: f64 },
    #[error("set is not contained in the region: worst excess {excess}")]
    ContainmentFailure { excess: f64 },
    #[error("test function does not violate the inequality (margin {margin})")]
    NotViolating { margin: f64 },
    #[error("radius {radius} is below the resolution limit {limit}")]
    ResolutionLimit { radius: f64, limit: f64 },
    #[error("time step {dt} exceeds the stability bound {bound}")]
    InvalidStep { dt: f64, bound: f64 },
    #[error("flow extinct: the interface has vanished")]
    FlowExtinct,
    #[error("invalid setup: {0}")]
    InvalidSetup(String),
    #[error("nesting violated by {amount} at t = {time}")]
    NestingFault { amount: f64, time: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MhError {
    fn from(e: std::io::Error) -> Self {
        MhError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for MhError {
    fn from(e: serde_json::Error) -> Self {
        MhError::Parse(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> MhError {
    MhError::InvalidInput(msg.into())
}
