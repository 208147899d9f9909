//! Minimal end-to-end run from the library API: sample a stochastic block
//! model, synthesize labeling functions, train, and print the cross-fold
//! test F1. This is the snippet shown in the workspace README.

use wsnet_core::pipeline::{generate_sbm, run_experiment, SbmConfig};
use wsnet_core::weak::generate_synthetic_lfs;
use wsnet_core::{CoreError, LfSynthConfig, TrainConfig};

fn main() -> Result<(), CoreError> {
    let (graph, y) = generate_sbm(&SbmConfig::default())?;
    let lfs = LfSynthConfig { n_lfs: 10, accuracy: 0.8, coverage: 0.7, seed: 1 };
    let wlm = generate_synthetic_lfs(&y, 3, &lfs)?;
    let report = run_experiment(&graph, &wlm, &y, &TrainConfig::default())?;
    println!("mean test F1 {:.4} ± {:.4}", report.mean_f1, report.std_f1);
    Ok(())
}
