use alloc::string::String;

/// Failures raised by the scoring core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("zero-norm vector has no direction")]
    ZeroNorm,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("embedding dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("record `{image_id}` has a non-finite vector entry at position {position}")]
    NonFinite { image_id: String, position: usize },
    #[error("duplicate image_id `{0}`")]
    DuplicateImageId(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid pair label {0}, expected +1 or -1")]
    InvalidLabel(i64),
    #[error("unknown identity `{0}`")]
    UnknownIdentity(String),
    #[error("negative pairs need at least 2 eligible identities, found {0}")]
    TooFewIdentities(usize),
    #[error("no eligible identity has 2 or more records for positive pairs")]
    NoPositivePairs,
    #[error("record index {index} out of range for a dataset of {len} records")]
    RecordOutOfRange { index: usize, len: usize },
    #[error("template `{0}` has no members")]
    EmptyTemplate(String),
    #[error("no score available for record {0}")]
    MissingScore(usize),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("training diverged at step {step}: {detail}")]
    Divergence { step: u64, detail: String },
    #[error("ROC needs at least one genuine and one impostor score")]
    MissingClass,
    #[error("requested {bins} bins for {n} records")]
    TooManyBins { bins: usize, n: usize },
    #[error("record {index} has no covariate `{name}`")]
    MissingCovariate { index: usize, name: String },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("normal equations are not positive definite")]
    Singular,
}

pub type Result<T> = core::result::Result<T, Error>;
