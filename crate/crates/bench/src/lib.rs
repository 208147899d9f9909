//! Shared fixtures for the criterion benchmarks: the desk-scale benchmark
//! graph with synthetic labeling functions, sized like the acceptance
//! protocol so timings reflect real workloads.

use wsnet_core::pipeline::{generate_sbm, SbmConfig};
use wsnet_core::weak::generate_synthetic_lfs;
use wsnet_core::{Graph, LfSynthConfig, WeakLabelMatrix};

/// The 300-node stochastic-block-model benchmark with ground truth.
pub fn benchmark_graph() -> (Graph, Vec<usize>) {
    generate_sbm(&SbmConfig::default()).expect("benchmark generates")
}

/// Ten labeling functions at 0.8 accuracy / 0.7 coverage.
pub fn benchmark_lfs(y: &[usize]) -> WeakLabelMatrix {
    generate_synthetic_lfs(
        y,
        3,
        &LfSynthConfig { n_lfs: 10, accuracy: 0.8, coverage: 0.7, seed: 17 },
    )
    .expect("labeling functions generate")
}
