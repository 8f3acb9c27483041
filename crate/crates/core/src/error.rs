use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("bag `{id}` has no instances")]
    EmptyBag { id: String },
    #[error("bag `{id}` has zero embedding dimension")]
    ZeroDimension { id: String },
    #[error("bag `{id}`: {len} values is not a multiple of dimension {dim}")]
    RaggedEmbeddings { id: String, len: usize, dim: usize },
    #[error("dimension mismatch: expected D={expected}, bag `{id}` has D={found}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("bag `{id}` contains a non-finite value at instance {instance}")]
    NonFinite { id: String, instance: usize },
    #[error("bag `{id}` instance {instance} has L2 norm {norm}, expected unit norm")]
    NotUnitNorm {
        id: String,
        instance: usize,
        norm: f64,
    },
    #[error("bag `{id}`: grid {rows}x{cols} does not cover M={m} instances")]
    GridMismatch {
        id: String,
        rows: usize,
        cols: usize,
        m: usize,
    },
    #[error("duplicate bag id `{id}`")]
    DuplicateId { id: String },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("need at least {needed} bags, found {found}")]
    TooFewBags { needed: usize, found: usize },
    #[error("subsample size {size} outside [1, {max}]")]
    InvalidSubsample { size: usize, max: usize },
    #[error("top-k value {k} outside [1, {m}]")]
    InvalidTopK { k: usize, m: usize },
    #[error("invalid weight vector: {0}")]
    InvalidWeights(&'static str),
    #[error("dataset has no reference bags")]
    MissingReference,
    #[error("no weights supplied for bag `{id}`")]
    MissingWeights { id: String },
    #[error("grid {rows}x{cols} is larger than mask {height}x{width}")]
    GridTooLarge {
        rows: usize,
        cols: usize,
        height: usize,
        width: usize,
    },
    #[error("invalid mask: {0}")]
    InvalidMask(&'static str),
    #[error("mask for `{id}` has size {found:?}, expected {expected:?}")]
    MaskSizeMismatch {
        id: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("mask id `{id}` does not name a bag in the dataset")]
    UnknownMask { id: String },
    #[error("no mask for bag `{id}`")]
    MissingMask { id: String },
    #[error("bag `{id}` has no grid")]
    MissingGrid { id: String },
    #[error("invalid Hausdorff variant: {0}")]
    InvalidVariant(&'static str),
    #[error("invalid distance matrix: {0}")]
    InvalidDistanceMatrix(&'static str),
    #[error("cluster count K={k} invalid for N={n}")]
    InvalidClusterCount { k: usize, n: usize },
    #[error("covariance of component {component} is singular even with regularization {reg}")]
    SingularCovariance { component: usize, reg: f64 },
    #[error("cost matrix contains a non-finite entry at ({row}, {col})")]
    NonFiniteCost { row: usize, col: usize },
    #[error("bag at position {index} has no ground-truth label")]
    UnlabeledBag { index: usize },
    #[error("nothing left to evaluate after exclusions")]
    EmptyEvaluation,
    #[error("empty K range")]
    EmptyRange,
    #[error("K range must be ascending within [1, {n}]")]
    InvalidRange { n: usize },
    #[error("ROC-AUC undefined: need both anomalous and normal pixels")]
    UndefinedAuc,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
