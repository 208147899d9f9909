//! Weakly supervised graph contrastive learning toolkit.
//!
//! This crate implements WSNet: a two-layer graph-convolutional encoder
//! trained with three jointly optimized objectives —
//!
//! * a **weighted weak-label cross-entropy** (`L_WLCE`) over labels
//!   aggregated from noisy labeling functions, with per-node weights `ρ`
//!   combining cluster size, centroid similarity, and vote entropy,
//! * a **weak-label InfoNCE contrast** (`L_WLCon`) whose positive pairs are
//!   selected by vote-vector similarity and whose negatives are sampled from
//!   non-neighbors, and
//! * a **community-pooled structural contrast** (`L_SCon`) discriminating
//!   real from feature-shuffled nodes against their community summary.
//!
//! Around the objective sit the pieces needed to run it end to end: a sparse
//! graph representation with symmetric adjacency normalization, a
//! labeling-function matrix with majority vote / entropy / similarity
//! utilities plus a synthetic generator, Louvain community detection,
//! k-means clustering, a small reverse-mode autodiff engine with an Adam
//! optimizer, evaluation metrics, and a cross-validated experiment pipeline
//! (noise sweeps, ablations, majority-vote baseline) with deterministic
//! seeding throughout.

pub mod autodiff;
pub mod checkpoint;
pub mod cluster;
pub mod community;
pub mod error;
pub mod graph;
pub mod losses;
pub mod metrics;
pub mod nn;
pub mod optim;
pub mod pipeline;
pub mod rng;
pub mod sparse;
pub mod weak;

pub use error::CoreError;
pub use graph::{Graph, NormalizedAdjacency};
pub use losses::{ContrastBatch, LossBreakdown, RhoWeights};
pub use pipeline::{
    AblationReport, GridSearchReport, RunReport, SbmConfig, SweepReport, TrainConfig,
};
pub use sparse::CsrMatrix;
pub use weak::{AggregatedLabels, LfSynthConfig, WeakLabelMatrix};

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
