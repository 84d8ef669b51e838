use finsec_core::{BandError, DescriptorError, GeometryError, GroupError, SectionError};
use thiserror::Error;

/// `EX_DATAERR`-style code for malformed or inconsistent input.
pub const EXIT_SCHEMA: i32 = 64;
/// A computational bound (ball size, search depth, matrix dimension) was hit.
pub const EXIT_CAPABILITY: i32 = 65;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("capability bound exceeded: {0}")]
    Capability(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Capability(_) => EXIT_CAPABILITY,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

pub fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn group_is_capability(e: &GroupError) -> bool {
    matches!(e, GroupError::CapacityExceeded { .. } | GroupError::DepthExceeded { .. })
}

fn geometry_is_capability(e: &GeometryError) -> bool {
    match e {
        GeometryError::Group(g) => group_is_capability(g),
        GeometryError::SearchExhausted { .. } => true,
        _ => false,
    }
}

fn band_is_capability(e: &BandError) -> bool {
    match e {
        BandError::Group(g) => group_is_capability(g),
        BandError::Geometry(g) => geometry_is_capability(g),
        _ => false,
    }
}

fn classify(capability: bool, msg: String) -> CliError {
    if capability {
        CliError::Capability(msg)
    } else {
        CliError::Schema(msg)
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        classify(group_is_capability(&e), e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        classify(geometry_is_capability(&e), e.to_string())
    }
}

impl From<BandError> for CliError {
    fn from(e: BandError) -> Self {
        classify(band_is_capability(&e), e.to_string())
    }
}

impl From<SectionError> for CliError {
    fn from(e: SectionError) -> Self {
        let capability = match &e {
            SectionError::DimensionExceeded { .. } => true,
            SectionError::Band(b) => band_is_capability(b),
            SectionError::Geometry(g) => geometry_is_capability(g),
            SectionError::Group(g) => group_is_capability(g),
            _ => false,
        };
        classify(capability, e.to_string())
    }
}

impl From<DescriptorError> for CliError {
    fn from(e: DescriptorError) -> Self {
        let capability = match &e {
            DescriptorError::Group(g) => group_is_capability(g),
            DescriptorError::Geometry(g) => geometry_is_capability(g),
            DescriptorError::Band(b) => band_is_capability(b),
            _ => false,
        };
        classify(capability, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Schema(e.to_string())
    }
}
