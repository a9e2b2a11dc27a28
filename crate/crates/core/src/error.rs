use std::path::PathBuf;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("probe `{probe}` is undefined at point {point}")]
    ProbeDomain { probe: String, point: usize },

    #[error("invalid probe set: {0}")]
    InvalidProbeSet(String),

    #[error("region is empty")]
    EmptyRegion,

    #[error("regions belong to different spaces")]
    SpaceMismatch,

    #[error("point {0} is not part of the space")]
    UnknownPoint(usize),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("feature vectors were produced by incompatible probe sets")]
    ProbeSetMismatch,

    #[error("operand is not a member of the groupoid carrier")]
    NotInCarrier,

    #[error("operation is undefined on this pair")]
    UndefinedPair,

    #[error("no patterns to classify")]
    NoPatterns,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported or malformed image: {0}")]
    Format(String),

    #[error("invalid tiling: {0}")]
    Spec(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
