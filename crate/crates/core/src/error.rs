//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`CoreError`]. Variants
//! carry enough context (indices, shapes, counts) that a failure deep inside
//! a training run can be reported without a backtrace.

use thiserror::Error;

/// Errors produced by graph construction, weak-label handling, clustering,
/// autodiff, loss evaluation, training, and checkpoint I/O.
#[derive(Debug, Error)]
pub enum CoreError {
    /// An edge endpoint referenced a node index outside `0..n_nodes`.
    #[error("edge ({u}, {v}) references node {bad}, but the graph has {n_nodes} nodes")]
    EndpointOutOfRange { u: usize, v: usize, bad: usize, n_nodes: usize },

    /// The feature matrix row count disagrees with the node count.
    #[error("feature matrix has {feature_rows} rows but the graph has {n_nodes} nodes")]
    FeatureRowMismatch { feature_rows: usize, n_nodes: usize },

    /// A graph with zero nodes was requested.
    #[error("graph must contain at least one node")]
    EmptyGraph,

    /// A weak-label vote lies outside `{-1, 0, .., n_classes-1}`.
    #[error("vote {value} at node {node}, labeling function {lf} is outside -1..{n_classes}")]
    VoteOutOfRange { node: usize, lf: usize, value: i64, n_classes: usize },

    /// Mismatched dimensions between two structures that must align.
    #[error("{context}: expected {expected}, got {actual}")]
    DimensionMismatch { context: &'static str, expected: usize, actual: usize },

    /// A parameter violated its documented range.
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// K-means was asked for more clusters than there are points.
    #[error("cannot partition {n_points} points into {k} clusters")]
    TooFewPoints { n_points: usize, k: usize },

    /// An autodiff operation produced or received a non-finite value.
    #[error("non-finite value encountered in {op}")]
    NonFinite { op: &'static str },

    /// Incompatible operand shapes inside the autodiff tape.
    #[error("shape mismatch in {op}: left is {lhs:?}, right is {rhs:?}")]
    ShapeMismatch { op: &'static str, lhs: (usize, usize), rhs: (usize, usize) },

    /// Every loss component was disabled by ablation flags.
    #[error("all loss components are disabled; at least one must be enabled")]
    AllLossesDisabled,

    /// Training produced a non-finite loss and cannot continue.
    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    /// A split request produced an empty train/validation/test set.
    #[error("cannot split {n_nodes} nodes into non-empty sets with fractions {fractions:?}")]
    SplitTooSmall { n_nodes: usize, fractions: [f64; 3] },

    /// Evaluation was requested on an empty index set.
    #[error("cannot evaluate on an empty split")]
    EmptySplit,

    /// Checkpoint bytes did not start with the expected magic tag.
    #[error("not a checkpoint file: bad magic bytes")]
    BadMagic,

    /// Checkpoint format version is not supported by this build.
    #[error("unsupported checkpoint version {found}, expected {expected}")]
    UnsupportedVersion { found: u32, expected: u32 },

    /// Checkpoint payload was truncated or internally inconsistent.
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    /// Underlying I/O failure (checkpoint read/write).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
