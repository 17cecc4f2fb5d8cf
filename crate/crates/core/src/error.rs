use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("points are equal")]
    EqualPoints,
    #[error("value lies outside the unit universe: {0}")]
    OutOfUniverse(String),
    #[error("points share coordinate on axis {axis}")]
    SharedCoordinate { axis: usize },
    #[error("rectangles have overlapping projections on axis {axis}")]
    OverlappingProjections { axis: usize },
    #[error("point does not lie in the interval")]
    PointNotInInterval,
    #[error("point does not lie in the rectangle")]
    PointNotInRect,
    #[error("operation leaves the unit universe")]
    UniverseExceeded,
    #[error("dyadic level {level} exceeds the supported precision")]
    PrecisionExceeded { level: i64 },
    #[error("rectangles are nested or disjoint")]
    NestedOrDisjoint,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("requested size {requested} exceeds the cap {cap}")]
    ResourceCap { requested: u128, cap: u128 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no free dyadic subinterval found: {0}")]
    NoGapFound(String),
    #[error("coordinate collision could not be resolved: {0}")]
    CoordinateCollision(String),
    #[error("construction invariant violated: {0}")]
    InvariantViolation(String),
    #[error("an atom of the measure coincides with an evaluation point on some axis")]
    AtomCoincidence,
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("pieces of a simple function overlap")]
    OverlappingPieces,
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{check} failed: {source}")]
    Check { check: String, source: Box<Error> },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
