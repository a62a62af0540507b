use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample has no tokens")]
    EmptySample,

    #[error("unknown tag `{0}`")]
    UnknownTag(String),

    #[error("IOB violation at index {index}: {reason}")]
    IobViolation { index: usize, reason: String },

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("sample {sample}: {message}")]
    Schema { sample: usize, message: String },

    #[error("dataset has {0} samples, at least 10 are required to split")]
    TooSmall(usize),

    #[error("invalid dataset size {0}")]
    InvalidSize(usize),

    #[error("training split is empty")]
    EmptyTrain,

    #[error("sample of length {len} exceeds the maximum of {max}")]
    TooLong { len: usize, max: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("batch has no unmasked positions")]
    EmptyLoss,

    #[error("non-finite gradient in `{0}`")]
    NonFiniteGradient(String),

    #[error("all {0} trials failed")]
    StudyFailed(usize),

    #[error("gold and predicted sequences are misaligned: {0}")]
    Alignment(String),

    #[error("nothing to evaluate")]
    EmptyEval,

    #[error("empty input")]
    EmptyInput,

    #[error("{0}")]
    Pairing(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
