//! Configuration files: flat TOML with one section per concern, every key
//! optional, defaults identical to [`TrainConfig::default`]. A command-line
//! `--seed` overrides the file's `[protocol].seed`.
//!
//! ```toml
//! [model]
//! hidden1 = 64
//! embedding = 32
//!
//! [optimizer]
//! learning_rate = 0.01
//! weight_decay = 0.0005
//! beta1 = 0.9
//! beta2 = 0.999
//! epsilon = 1e-8
//!
//! [losses]
//! tau = 5.0
//! r = 50
//! temperature_in_exponent = true
//! enable_scon = true
//! enable_wlce = true
//! enable_wlcon = true
//!
//! [rho]
//! entropy_mode = "one_minus_normalized_entropy"  # or "entropy"
//! cosine_shift = true
//! uniform = false
//!
//! [protocol]
//! epochs = 200
//! n_folds = 5
//! train_fraction = 0.8
//! val_fraction = 0.1
//! test_fraction = 0.1
//! seed = 42
//!
//! [sweep]
//! n_lfs = 10
//! coverage = 0.7
//!
//! [synth]
//! noise_sigma = 1.0
//! ```
//!
//! Unknown keys are rejected so typos fail loudly (exit code 2).

use crate::error::CliError;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use wsnet_core::losses::{RhoEntropyMode, RhoSettings};
use wsnet_core::pipeline::{AblationFlags, SplitFractions};
use wsnet_core::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hidden1: usize,
    pub embedding: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = TrainConfig::default();
        Self { hidden1: c.hidden1, embedding: c.embedding }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let c = TrainConfig::default();
        Self {
            learning_rate: c.learning_rate,
            weight_decay: c.weight_decay,
            beta1: c.adam_beta1,
            beta2: c.adam_beta2,
            epsilon: c.adam_epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    pub tau: f64,
    pub r: usize,
    pub temperature_in_exponent: bool,
    pub enable_scon: bool,
    pub enable_wlce: bool,
    pub enable_wlcon: bool,
}

impl Default for LossSection {
    fn default() -> Self {
        let c = TrainConfig::default();
        Self {
            tau: c.tau,
            r: c.r,
            temperature_in_exponent: c.temperature_in_exponent,
            enable_scon: c.ablation.scon,
            enable_wlce: c.ablation.wlce,
            enable_wlcon: c.ablation.wlcon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhoSection {
    pub entropy_mode: RhoEntropyMode,
    pub cosine_shift: bool,
    /// Replace ρ with all-ones (the majority-vote baseline's weighting).
    pub uniform: bool,
}

impl Default for RhoSection {
    fn default() -> Self {
        let c = TrainConfig::default();
        Self {
            entropy_mode: c.rho.entropy_mode,
            cosine_shift: c.rho.cosine_shift,
            uniform: c.rho_uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub epochs: usize,
    pub n_folds: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let c = TrainConfig::default();
        Self {
            epochs: c.epochs,
            n_folds: c.n_folds,
            train_fraction: c.fractions.train,
            val_fraction: c.fractions.val,
            test_fraction: c.fractions.test,
            seed: c.seed,
        }
    }
}

/// Labeling-function settings used when a command synthesizes its own
/// votes (the `sweep` noise levels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub n_lfs: usize,
    pub coverage: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { n_lfs: 10, coverage: 0.7 }
    }
}

/// Extra generator knobs without dedicated command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// Standard deviation of the Gaussian noise on one-hot features.
    pub noise_sigma: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self { noise_sigma: 1.0 }
    }
}

/// The full configuration file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub model: ModelSection,
    pub optimizer: OptimizerSection,
    pub losses: LossSection,
    pub rho: RhoSection,
    pub protocol: ProtocolSection,
    pub sweep: SweepSection,
    pub synth: SynthSection,
}

impl FileConfig {
    /// Flattens the sections into the core training configuration,
    /// applying a command-line seed override if given.
    pub fn to_train_config(&self, seed_override: Option<u64>) -> TrainConfig {
        TrainConfig {
            epochs: self.protocol.epochs,
            r: self.losses.r,
            tau: self.losses.tau,
            temperature_in_exponent: self.losses.temperature_in_exponent,
            learning_rate: self.optimizer.learning_rate,
            weight_decay: self.optimizer.weight_decay,
            adam_beta1: self.optimizer.beta1,
            adam_beta2: self.optimizer.beta2,
            adam_epsilon: self.optimizer.epsilon,
            hidden1: self.model.hidden1,
            embedding: self.model.embedding,
            n_folds: self.protocol.n_folds,
            fractions: SplitFractions {
                train: self.protocol.train_fraction,
                val: self.protocol.val_fraction,
                test: self.protocol.test_fraction,
            },
            seed: seed_override.unwrap_or(self.protocol.seed),
            ablation: AblationFlags {
                scon: self.losses.enable_scon,
                wlce: self.losses.enable_wlce,
                wlcon: self.losses.enable_wlcon,
            },
            rho: RhoSettings {
                entropy_mode: self.rho.entropy_mode,
                cosine_shift: self.rho.cosine_shift,
            },
            rho_uniform: self.rho.uniform,
        }
    }
}

/// Reads and validates the configuration. `path = None` means defaults.
/// Any failure here is an invalid-config error (exit code 2).
pub fn load_config(
    path: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<(TrainConfig, FileConfig)> {
    let (file, source_name) = match path {
        None => (FileConfig::default(), "defaults".to_string()),
        Some(p) => {
            let source_name = p.display().to_string();
            let text = fs::read_to_string(p).map_err(|e| CliError::Config {
                source_name: source_name.clone(),
                message: format!("cannot read: {e}"),
            })?;
            let parsed: FileConfig = toml::from_str(&text).map_err(|e| CliError::Config {
                source_name: source_name.clone(),
                message: e.to_string(),
            })?;
            (parsed, source_name)
        }
    };
    let train = file.to_train_config(seed_override);
    train
        .validate()
        .map_err(|e| CliError::Config { source_name, message: e.to_string() })?;
    Ok((train, file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;
    use tempfile::NamedTempFile;

    fn file_with(content: &str) -> NamedTempFile {
        let mut f = NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn empty_sections_reproduce_the_default_training_config() {
        assert_eq!(FileConfig::default().to_train_config(None), TrainConfig::default());
        let f = file_with("");
        let (cfg, _) = load_config(Some(f.path()), None).unwrap();
        assert_eq!(cfg, TrainConfig::default());
    }

    #[test]
    fn sections_map_onto_the_training_config() {
        let f = file_with(
            r#"
            [model]
            hidden1 = 16
            embedding = 8

            [optimizer]
            learning_rate = 0.005
            beta1 = 0.8

            [losses]
            tau = 0.5
            r = 7
            enable_wlcon = false

            [rho]
            entropy_mode = "entropy"
            uniform = true

            [protocol]
            epochs = 12
            n_folds = 2
            seed = 9
            "#,
        );
        let (cfg, file) = load_config(Some(f.path()), None).unwrap();
        assert_eq!((cfg.hidden1, cfg.embedding), (16, 8));
        assert_eq!(cfg.learning_rate, 0.005);
        assert_eq!(cfg.adam_beta1, 0.8);
        assert_eq!((cfg.tau, cfg.r), (0.5, 7));
        assert!(!cfg.ablation.wlcon && cfg.ablation.scon && cfg.ablation.wlce);
        assert_eq!(cfg.rho.entropy_mode, RhoEntropyMode::Entropy);
        assert!(cfg.rho_uniform);
        assert_eq!((cfg.epochs, cfg.n_folds, cfg.seed), (12, 2, 9));
        // Untouched sections keep their defaults.
        assert_eq!(file.sweep, SweepSection::default());
        assert_eq!(cfg.weight_decay, TrainConfig::default().weight_decay);
    }

    #[test]
    fn command_line_seed_wins_over_the_file() {
        let f = file_with("[protocol]\nseed = 9\n");
        let (cfg, _) = load_config(Some(f.path()), Some(1234)).unwrap();
        assert_eq!(cfg.seed, 1234);
        let (cfg, _) = load_config(Some(f.path()), None).unwrap();
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn unknown_keys_are_invalid_config() {
        let f = file_with("[losses]\ntemperature = 0.5\n");
        let err = load_config(Some(f.path()), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("temperature"), "{err}");
    }

    #[test]
    fn out_of_range_values_are_invalid_config() {
        let f = file_with("[optimizer]\nlearning_rate = -0.5\n");
        let err = load_config(Some(f.path()), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("learning_rate"), "{err}");
    }

    #[test]
    fn malformed_toml_and_missing_file_are_invalid_config() {
        let f = file_with("[protocol\nepochs = 3");
        assert_eq!(load_config(Some(f.path()), None).unwrap_err().exit_code(), 2);
        let err = load_config(Some(Path::new("/nonexistent/wsnet.toml")), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("cannot read"), "{err}");
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let f = file_with("[protocol]\ntrain_fraction = 0.9\nval_fraction = 0.3\n");
        let err = load_config(Some(f.path()), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
