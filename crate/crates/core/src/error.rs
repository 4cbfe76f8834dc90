use std::path::PathBuf;

/// Errors raised by the numeric primitives, targets, kernels and samplers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty log-sum-exp")]
    EmptyLogSumExp,
    #[error("NaN in log-domain input")]
    NanInput,
    #[error("degenerate weights")]
    DegenerateWeights,
    #[error("zero weight vector")]
    ZeroWeights,
    #[error("weights not normalized (sum = {sum})")]
    NotNormalized { sum: f64 },
    #[error("degenerate ensemble")]
    DegenerateEnsemble,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("corrupt evidence history")]
    CorruptEvidenceHistory,
    #[error("missing evidence trace")]
    MissingEvidence,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },
    #[error("parse error at row {row}: invalid token {token:?}")]
    Parse { row: usize, token: String },
    #[error("constant covariate column {0}")]
    ConstantColumn(usize),
    #[error("standard deviation must be positive (index {0})")]
    NonPositiveSd(usize),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
