use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("context mismatch: {0}")]
    ContextMismatch(String),
    #[error("invalid generating set: {0}")]
    InvalidGenerators(String),
    #[error("ball enumeration at radius {radius} would exceed {limit} elements")]
    CapacityExceeded { radius: usize, limit: usize },
    #[error("{element} not reached within word length {depth}")]
    DepthExceeded { element: String, depth: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("section sequence has no set with index {0}")]
    MissingSection(usize),
    #[error("inflating search exhausted after {scanned} candidates (block {block})")]
    SearchExhausted { block: usize, scanned: usize },
    #[error("invalid geodesic path: {0}")]
    NotGeodesic(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("operators live on different groups ({0} vs {1})")]
    KindMismatch(String, String),
    #[error("periodic diagonals need an integer lattice; got {0}")]
    PeriodicOffLattice(String),
    #[error("invalid diagonal: {0}")]
    InvalidDiagonal(String),
    #[error("sequence does not tend to infinity: {0}")]
    NotEscaping(String),
    #[error("limit does not exist: {0}")]
    NotConvergent(NotConvergent),
}

/// Witness for a sequence of shifted operators that fails to settle: one
/// band element, one probe point and two sequence indices whose shifted
/// diagonal values disagree.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NotConvergent {
    pub shift: String,
    pub point: String,
    pub indices: (usize, usize),
    pub values: ((f64, f64), (f64, f64)),
}

impl std::fmt::Display for NotConvergent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "diagonal at shift {} disagrees at point {} between indices {} and {}",
            self.shift, self.point, self.indices.0, self.indices.1
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SectionError {
    #[error(transparent)]
    Band(#[from] BandError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("matrix dimension {dim} exceeds the cap of {cap}")]
    DimensionExceeded { dim: usize, cap: usize },
    #[error("window mismatch: {0}")]
    WindowMismatch(String),
    #[error("strong limit does not settle: entry ({row}, {col}) differs by {gap:e} between the last two sections")]
    NotConvergent { row: String, col: String, gap: f64 },
    #[error("not enough sections contain the probe window (need 2, have {0})")]
    InsufficientData(usize),
    #[error("empty matrix")]
    Empty,
}

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Band(#[from] BandError),
}
