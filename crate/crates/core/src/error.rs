use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by gallery construction, the numeric kernels, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("embedding dimension mismatch in record `{record}`: found {found}, expected {expected}")]
    DimensionMismatch {
        record: String,
        expected: usize,
        found: usize,
    },

    #[error("vector dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("duplicate tracklet id `{0}`")]
    DuplicateTrackletId(String),

    #[error("non-finite embedding entry at position {index} in record `{record}`")]
    NonFiniteEntry { record: String, index: usize },

    #[error("empty embedding in record `{record}`")]
    EmptyEmbedding { record: String },

    #[error("invalid length_frames {length} in record `{record}`; must be >= 1")]
    InvalidLength { record: String, length: u64 },

    #[error("record `{0}` has no nodule_id; ground truth is required for this operation")]
    MissingNoduleId(String),

    #[error("gallery must contain at least one record")]
    EmptyGallery,

    #[error("empty input")]
    EmptyInput,

    #[error("zero-norm embedding; cosine similarity is undefined for degenerate extractor output")]
    ZeroNorm,

    #[error("operation requires the euclidean metric")]
    NonEuclideanMetric,

    #[error("scored pairs must contain both a positive and a negative example")]
    SingleClass,

    #[error("pair sets are misaligned: {0}")]
    MisalignedPairs(String),

    #[error("degenerate variance: AUCs differ but the estimated variance of the difference is zero")]
    DegenerateVariance,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("label row {row} is not one-hot")]
    NotOneHot { row: usize },

    #[error("gallery has {found} distinct nodules, need at least {needed}")]
    TooFewNodules { needed: usize, found: usize },

    #[error("rejection sampling failed: cannot place {nodules} nodule centers at min angle {min_angle} rad in dimension {dim}")]
    CenterSampling {
        nodules: usize,
        min_angle: f64,
        dim: usize,
    },

    #[error("partition is invalid: {0}")]
    InvalidPartition(String),

    #[error("records in clusters file do not match the gallery: {0}")]
    RecordMismatch(String),

    #[error("{path}: line {line}: {message}")]
    ParseLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    FileFormat { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
