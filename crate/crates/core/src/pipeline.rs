//! End-to-end training, evaluation, the cross-validated experiment
//! protocol, synthetic-noise sweeps, the ablation driver, and the
//! majority-vote baseline.
//!
//! One training epoch: refresh the selection state (K-means clusters, ρ
//! weights, contrastive batch, feature corruption) from the current
//! embeddings without gradients, then build the tape — encode real and
//! corrupted features, compute the enabled loss components, backpropagate,
//! and take one Adam step. Validation weighted F1 is tracked per epoch and
//! the best-scoring parameters are returned.
//!
//! Every random choice derives from the run seed through
//! [`crate::rng::derive_seed`] with a component tag, so runs are bitwise
//! reproducible and sub-streams are independent of each other.

use crate::autodiff::Tape;
use crate::cluster::kmeans;
use crate::community::detect_communities;
use crate::graph::{normalize_adjacency, Graph, NormalizedAdjacency};
use crate::losses::{
    build_contrast_batch, compute_rho, scon_loss, total_loss, wlce_loss, wlcon_loss,
    LossBreakdown, RhoEntropyMode, RhoSettings,
};
use crate::metrics::{ClassMetrics, ConfusionMatrix};
use crate::nn::{classify, encode, EncoderParams, ModelDims};
use crate::optim::{Adam, AdamConfig};
use crate::rng::{component_rng, derive_seed};
use crate::weak::{
    generate_synthetic_lfs, majority_vote, vote_entropy, LfSynthConfig, WeakLabelMatrix,
};
use crate::{error::CoreError, Result};
use ndarray::{Array2, ArrayView2};
use rand::distributions::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::time::Instant;

/// Train/validation/test proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.8, val: 0.1, test: 0.1 }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|&f| !(f.is_finite() && f > 0.0)) {
            return Err(CoreError::InvalidParameter {
                name: "fractions",
                message: format!("all fractions must be positive, got {parts:?}"),
            });
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CoreError::InvalidParameter {
                name: "fractions",
                message: format!("fractions must sum to 1, got {sum}"),
            });
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }
}

/// One fold's disjoint node index sets.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Draws `n_folds` independent random splits (fresh shuffles, not rotated
/// folds). Each fold shuffles `0..n` with its own derived sub-seed and cuts
/// at `⌊train·n⌋` and `⌊(train+val)·n⌋`.
pub fn make_splits(
    n: usize,
    fractions: &SplitFractions,
    n_folds: usize,
    seed: u64,
) -> Result<Vec<SplitIndices>> {
    fractions.validate()?;
    if n_folds == 0 {
        return Err(CoreError::InvalidParameter {
            name: "n_folds",
            message: "need at least one fold".into(),
        });
    }
    let a = (fractions.train * n as f64).floor() as usize;
    let b = ((fractions.train + fractions.val) * n as f64).floor() as usize;
    if a == 0 || b <= a || n <= b {
        return Err(CoreError::SplitTooSmall { n_nodes: n, fractions: fractions.as_array() });
    }
    let mut folds = Vec::with_capacity(n_folds);
    for fold in 0..n_folds {
        let mut rng = component_rng(seed, "split", &[fold as u64]);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        folds.push(SplitIndices {
            train: perm[..a].to_vec(),
            val: perm[a..b].to_vec(),
            test: perm[b..].to_vec(),
        });
    }
    Ok(folds)
}

/// Which loss components stay enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationFlags {
    pub scon: bool,
    pub wlce: bool,
    pub wlcon: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        Self { scon: true, wlce: true, wlcon: true }
    }
}

/// Full training configuration; every knob the objective or protocol
/// exposes lives here so a config hash pins the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Negatives per contrastive anchor.
    pub r: usize,
    /// InfoNCE temperature.
    pub tau: f64,
    /// Divide dot products by τ inside the exponent (standard InfoNCE).
    /// The alternative — scaling the exponentials themselves — cancels τ
    /// algebraically and is kept only for fidelity experiments.
    pub temperature_in_exponent: bool,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Adam first-moment decay β₁.
    pub adam_beta1: f64,
    /// Adam second-moment decay β₂.
    pub adam_beta2: f64,
    /// Adam denominator stabiliser ε.
    pub adam_epsilon: f64,
    pub hidden1: usize,
    pub embedding: usize,
    pub n_folds: usize,
    pub fractions: SplitFractions,
    pub seed: u64,
    pub ablation: AblationFlags,
    pub rho: RhoSettings,
    /// Replace ρ with all-ones (the majority-vote baseline's weighting).
    pub rho_uniform: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            r: 50,
            tau: 5.0,
            temperature_in_exponent: true,
            learning_rate: 1e-2,
            weight_decay: 5e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            hidden1: 64,
            embedding: 32,
            n_folds: 5,
            fractions: SplitFractions::default(),
            seed: 42,
            ablation: AblationFlags::default(),
            rho: RhoSettings::default(),
            rho_uniform: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(CoreError::InvalidParameter {
                name: "epochs",
                message: "need at least one epoch".into(),
            });
        }
        if self.r == 0 {
            return Err(CoreError::InvalidParameter {
                name: "r",
                message: "need at least one negative sample".into(),
            });
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "tau",
                message: format!("temperature must be positive and finite, got {}", self.tau),
            });
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "learning_rate",
                message: format!("must be positive, got {}", self.learning_rate),
            });
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "weight_decay",
                message: format!("must be non-negative, got {}", self.weight_decay),
            });
        }
        self.adam().validate()?;
        if self.hidden1 == 0 || self.embedding == 0 {
            return Err(CoreError::InvalidParameter {
                name: "hidden dims",
                message: "layer widths must be positive".into(),
            });
        }
        if self.n_folds == 0 {
            return Err(CoreError::InvalidParameter {
                name: "n_folds",
                message: "need at least one fold".into(),
            });
        }
        if !(self.ablation.scon || self.ablation.wlce || self.ablation.wlcon) {
            return Err(CoreError::AllLossesDisabled);
        }
        self.fractions.validate()
    }

    /// Hex SHA-256 of the canonical JSON encoding; any hyperparameter
    /// change changes the hash.
    pub fn config_hash(&self) -> String {
        let encoded = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(encoded.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The majority-vote baseline: same encoder and classifier, plain
    /// unweighted cross-entropy on majority-vote labels, no contrastive
    /// terms.
    pub fn majority_vote_variant(&self) -> Self {
        Self {
            ablation: AblationFlags { scon: false, wlce: true, wlcon: false },
            rho_uniform: true,
            ..self.clone()
        }
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

/// One epoch's logged losses and validation score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_scon: f64,
    pub l_wlce: f64,
    pub l_wlcon: f64,
    pub total: f64,
    pub val_f1: f64,
}

/// Everything measured while training one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_weighted_f1: f64,
    pub best_epoch: usize,
    pub best_val_f1: f64,
    /// Test-split precision/recall/F1 per class.
    pub per_class: Vec<ClassMetrics>,
    pub curves: Vec<EpochRecord>,
    /// How often a predicted probability hit the cross-entropy log clamp.
    pub log_clamp_hits: usize,
}

/// Cross-validated experiment outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
    /// Sample standard deviation (n−1 denominator); 0 for a single fold.
    pub std_f1: f64,
    pub config_hash: String,
    pub wall_clock_secs: f64,
    pub folds: Vec<FoldReport>,
}

impl RunReport {
    fn aggregate(folds: Vec<FoldReport>, config_hash: String, wall_clock_secs: f64) -> Self {
        let fold_f1: Vec<f64> = folds.iter().map(|f| f.test_weighted_f1).collect();
        let (mean, std) = mean_std(&fold_f1);
        Self { fold_f1, mean_f1: mean, std_f1: std, config_hash, wall_clock_secs, folds }
    }
}

/// Mean and sample standard deviation (n−1; 0 when n < 2).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

/// Trained parameters plus the fold's report.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    pub report: FoldReport,
}

/// Tape-free forward pass for evaluation and selection refresh.
fn forward_embeddings(
    params: &EncoderParams,
    adj: &NormalizedAdjacency,
    x: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    let pre1 = adj.matrix().dot_dense(x.dot(&params.w1).view())? + &params.b1.row(0);
    let act = pre1.mapv(|v| v.max(0.0));
    let h = adj.matrix().dot_dense(act.dot(&params.w2).view())? + &params.b2.row(0);
    Ok(h)
}

fn argmax_row(row: ndarray::ArrayView1<f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (j, &v) in row.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = j;
        }
    }
    best
}

/// Class predictions: argmax over classifier logits (ties to the lowest
/// class index).
pub fn predict(params: &EncoderParams, g: &Graph, adj: &NormalizedAdjacency) -> Result<Vec<usize>> {
    let h = forward_embeddings(params, adj, g.features().view())?;
    let logits = h.dot(&params.wc) + &params.bc.row(0);
    Ok(logits.rows().into_iter().map(argmax_row).collect())
}

/// Per-split evaluation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEval {
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// Weighted F1 and per-class metrics of `params` on the given node subset.
pub fn evaluate(
    params: &EncoderParams,
    g: &Graph,
    y_true: &[usize],
    indices: &[usize],
) -> Result<SplitEval> {
    if indices.is_empty() {
        return Err(CoreError::EmptySplit);
    }
    let adj = normalize_adjacency(g);
    let preds = predict(params, g, &adj)?;
    eval_subset(&preds, y_true, indices, params.dims().n_classes)
}

fn eval_subset(
    preds: &[usize],
    y_true: &[usize],
    indices: &[usize],
    n_classes: usize,
) -> Result<SplitEval> {
    if indices.is_empty() {
        return Err(CoreError::EmptySplit);
    }
    let mut yt = Vec::with_capacity(indices.len());
    let mut yp = Vec::with_capacity(indices.len());
    for &i in indices {
        if i >= y_true.len() {
            return Err(CoreError::InvalidParameter {
                name: "indices",
                message: format!("node {i} outside label vector of length {}", y_true.len()),
            });
        }
        yt.push(y_true[i]);
        yp.push(preds[i]);
    }
    let cm = ConfusionMatrix::from_pairs(&yt, &yp, n_classes)?;
    Ok(SplitEval { weighted_f1: cm.weighted_f1(), per_class: cm.class_metrics() })
}

/// Per-node entropy factor in the configured direction, used directly for
/// the first epoch before any cluster structure exists.
fn entropy_factors(wlm: &WeakLabelMatrix, mode: RhoEntropyMode) -> Vec<f64> {
    let ln_c = (wlm.n_classes() as f64).ln();
    (0..wlm.n_nodes())
        .map(|i| {
            let h = vote_entropy(wlm, i);
            match mode {
                RhoEntropyMode::Entropy => h,
                RhoEntropyMode::OneMinusNormalizedEntropy => (1.0 - h / ln_c).max(0.0),
            }
        })
        .collect()
}

/// Trains one fold and returns the best-validation-epoch parameters.
///
/// `fold_seed` drives every stochastic choice of this fold (initialization,
/// community detection, per-epoch K-means / negative sampling / corruption)
/// through tagged sub-seeds. Ground-truth labels are consulted only on the
/// validation split during training; the test split is touched exactly once,
/// after the best parameters are fixed.
pub fn train(
    g: &Graph,
    wlm: &WeakLabelMatrix,
    y_true: &[usize],
    split: &SplitIndices,
    cfg: &TrainConfig,
    fold_seed: u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = g.n_nodes();
    if wlm.n_nodes() != n {
        return Err(CoreError::DimensionMismatch {
            context: "weak-label row count",
            expected: n,
            actual: wlm.n_nodes(),
        });
    }
    if y_true.len() != n {
        return Err(CoreError::DimensionMismatch {
            context: "ground-truth label count",
            expected: n,
            actual: y_true.len(),
        });
    }
    let n_classes = wlm.n_classes();
    if let Some(&bad) = y_true.iter().find(|&&y| y >= n_classes) {
        return Err(CoreError::InvalidParameter {
            name: "y_true",
            message: format!("label {bad} outside {n_classes} classes"),
        });
    }
    if split.train.is_empty() || split.val.is_empty() || split.test.is_empty() {
        return Err(CoreError::EmptySplit);
    }
    for &i in split.train.iter().chain(&split.val).chain(&split.test) {
        if i >= n {
            return Err(CoreError::InvalidParameter {
                name: "split",
                message: format!("node {i} outside graph with {n} nodes"),
            });
        }
    }

    let dims = ModelDims {
        n_features: g.feature_dim(),
        hidden1: cfg.hidden1,
        embedding: cfg.embedding,
        n_classes,
    };
    let adj = normalize_adjacency(g);
    let communities = detect_communities(g, derive_seed(fold_seed, "louvain", &[]));
    let mut params = EncoderParams::init(dims, derive_seed(fold_seed, "init", &[]))?;
    let shapes: Vec<(usize, usize)> =
        params.as_slice().iter().map(|p| p.dim()).collect();
    let mut optimizer = Adam::new(cfg.adam(), &shapes)?;

    let agg = majority_vote(wlm);
    let epoch0_entropy = entropy_factors(wlm, cfg.rho.entropy_mode);
    let mut train_mask = vec![false; n];
    for &i in &split.train {
        train_mask[i] = true;
    }
    // Contrastive anchors: training-split nodes with at least one cast vote,
    // in ascending order so tie-breaking is independent of shuffle order.
    let mut anchors: Vec<usize> =
        split.train.iter().copied().filter(|&i| wlm.is_covered(i)).collect();
    anchors.sort_unstable();
    if cfg.ablation.wlcon && !cfg.ablation.wlce && !cfg.ablation.scon && anchors.is_empty() {
        return Err(CoreError::InvalidParameter {
            name: "ablation",
            message: "only the contrastive weak-label loss is enabled but no training node \
                      has a cast vote"
                .into(),
        });
    }

    let mut curves = Vec::with_capacity(cfg.epochs);
    let mut log_clamp_hits = 0;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut best_params = params.clone();

    for epoch in 0..cfg.epochs {
        let step = run_epoch(
            g,
            wlm,
            y_true,
            split,
            cfg,
            fold_seed,
            epoch,
            &adj,
            &communities,
            &agg,
            &epoch0_entropy,
            &train_mask,
            &anchors,
            &mut params,
            &mut optimizer,
        );
        let (breakdown, clamps) = match step {
            Ok(v) => v,
            // A non-finite intermediate value means the run diverged.
            Err(CoreError::NonFinite { op }) => {
                return Err(CoreError::Divergence {
                    epoch,
                    detail: format!("non-finite value in {op}"),
                })
            }
            Err(e) => return Err(e),
        };
        log_clamp_hits += clamps;

        // Post-step validation score with the updated parameters.
        let preds = predict(&params, g, &adj)?;
        let val = eval_subset(&preds, y_true, &split.val, n_classes)?;
        curves.push(EpochRecord {
            epoch,
            l_scon: breakdown.l_scon,
            l_wlce: breakdown.l_wlce,
            l_wlcon: breakdown.l_wlcon,
            total: breakdown.total,
            val_f1: val.weighted_f1,
        });
        if val.weighted_f1 > best_val {
            best_val = val.weighted_f1;
            best_epoch = epoch;
            best_params = params.clone();
        }
    }

    let preds = predict(&best_params, g, &adj)?;
    let test = eval_subset(&preds, y_true, &split.test, n_classes)?;
    Ok(TrainOutcome {
        params: best_params,
        report: FoldReport {
            fold: 0,
            test_weighted_f1: test.weighted_f1,
            best_epoch,
            best_val_f1: best_val,
            per_class: test.per_class,
            curves,
            log_clamp_hits,
        },
    })
}

/// One selection refresh + gradient step. Factored out so [`train`] can
/// map any non-finite failure to a divergence diagnostic with the epoch.
#[allow(clippy::too_many_arguments)]
fn run_epoch(
    g: &Graph,
    wlm: &WeakLabelMatrix,
    _y_true: &[usize],
    _split: &SplitIndices,
    cfg: &TrainConfig,
    fold_seed: u64,
    epoch: usize,
    adj: &NormalizedAdjacency,
    communities: &crate::cluster::Partition,
    agg: &crate::weak::AggregatedLabels,
    epoch0_entropy: &[f64],
    train_mask: &[bool],
    anchors: &[usize],
    params: &mut EncoderParams,
    optimizer: &mut Adam,
) -> Result<(LossBreakdown, usize)> {
    let n = g.n_nodes();
    let n_classes = wlm.n_classes();

    // --- selection refresh (constant w.r.t. gradients) ---
    let rho_vec: Vec<f64> = if cfg.rho_uniform {
        vec![1.0; n]
    } else if epoch == 0 {
        // No trained structure yet: clusters of random embeddings are
        // noise, so the first step weighs nodes by vote agreement alone.
        epoch0_entropy.to_vec()
    } else {
        let embeddings = forward_embeddings(params, adj, g.features().view())?;
        let clusters = kmeans(
            embeddings.view(),
            n_classes,
            derive_seed(fold_seed, "kmeans", &[epoch as u64]),
        )?;
        compute_rho(embeddings.view(), &clusters.partition, wlm, &cfg.rho)?
            .values()
            .to_vec()
    };
    let weights: Vec<f64> = (0..n)
        .map(|i| if train_mask[i] && wlm.is_covered(i) { rho_vec[i] } else { 0.0 })
        .collect();

    let batch = if cfg.ablation.wlcon && !anchors.is_empty() {
        Some(build_contrast_batch(
            wlm,
            g,
            anchors,
            cfg.r,
            cfg.tau,
            cfg.temperature_in_exponent,
            derive_seed(fold_seed, "wlcon", &[epoch as u64]),
        )?)
    } else {
        None
    };

    // --- gradient step ---
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape)?;
    let x = tape.constant(g.features().to_owned())?;
    let h = encode(&mut tape, adj, x, &bound)?;

    let mut clamp_hits = 0;
    let l_wlce = if cfg.ablation.wlce {
        let yhat = classify(&mut tape, h, &bound)?;
        let (loss, clamps) = wlce_loss(&mut tape, yhat, agg, &weights, n)?;
        clamp_hits = clamps;
        Some(loss)
    } else {
        None
    };
    let l_wlcon = match &batch {
        Some(b) => Some(wlcon_loss(&mut tape, h, b)?),
        None => None,
    };
    let l_scon = if cfg.ablation.scon {
        let corrupted =
            g.corrupt_features(derive_seed(fold_seed, "corrupt", &[epoch as u64]))?;
        let xc = tape.constant(corrupted)?;
        let hc = encode(&mut tape, adj, xc, &bound)?;
        Some(scon_loss(&mut tape, h, hc, communities)?)
    } else {
        None
    };
    let (total, breakdown) = total_loss(&mut tape, l_scon, l_wlce, l_wlcon)?;
    tape.backward(total)?;
    let grads = params.gradients(&tape, &bound);
    let mut param_refs = params.as_mut_slice();
    optimizer.step(&mut param_refs, &grads)?;
    Ok((breakdown, clamp_hits))
}

/// Runs the full protocol: `n_folds` fresh splits, one training run per
/// fold, aggregated mean ± sample-std weighted F1.
pub fn run_experiment(
    g: &Graph,
    wlm: &WeakLabelMatrix,
    y_true: &[usize],
    cfg: &TrainConfig,
) -> Result<RunReport> {
    run_experiment_detailed(g, wlm, y_true, cfg).map(|(report, _)| report)
}

/// [`run_experiment`], but also returns each fold's best-validation
/// parameters (in fold order) so callers can persist checkpoints.
pub fn run_experiment_detailed(
    g: &Graph,
    wlm: &WeakLabelMatrix,
    y_true: &[usize],
    cfg: &TrainConfig,
) -> Result<(RunReport, Vec<EncoderParams>)> {
    cfg.validate()?;
    let started = Instant::now();
    let splits = make_splits(g.n_nodes(), &cfg.fractions, cfg.n_folds, cfg.seed)?;
    let mut folds = Vec::with_capacity(splits.len());
    let mut params = Vec::with_capacity(splits.len());
    for (fold, split) in splits.iter().enumerate() {
        let fold_seed = derive_seed(cfg.seed, "fold", &[fold as u64]);
        let mut outcome = train(g, wlm, y_true, split, cfg, fold_seed)?;
        outcome.report.fold = fold;
        folds.push(outcome.report);
        params.push(outcome.params);
    }
    let report =
        RunReport::aggregate(folds, cfg.config_hash(), started.elapsed().as_secs_f64());
    Ok((report, params))
}

/// The majority-vote comparison point: identical architecture and protocol,
/// plain unweighted cross-entropy on majority-vote labels, contrastive
/// terms disabled.
pub fn majority_vote_baseline(
    g: &Graph,
    wlm: &WeakLabelMatrix,
    y_true: &[usize],
    cfg: &TrainConfig,
) -> Result<RunReport> {
    run_experiment(g, wlm, y_true, &cfg.majority_vote_variant())
}

/// One noise level's aggregated scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p_a: f64,
    pub wsnet_mean_f1: f64,
    pub wsnet_std_f1: f64,
    pub wsnet_fold_f1: Vec<f64>,
    pub baseline_mean_f1: f64,
    pub baseline_std_f1: f64,
    pub baseline_fold_f1: Vec<f64>,
    /// Accuracy of the raw majority-vote labels on covered nodes, as a
    /// reference for how informative the labeling functions were.
    pub mv_label_accuracy: f64,
}

/// Label-noise sweep outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub n_lfs: usize,
    pub coverage: f64,
    pub config_hash: String,
    pub wall_clock_secs: f64,
}

/// For each accuracy level, generates synthetic labeling functions and runs
/// the full protocol for both the weighted model and the majority-vote
/// baseline. Every level draws its labeling functions from the *same*
/// derived seed: because the generator consumes a fixed number of draws per
/// vote, the levels share one abstain pattern and each cast vote flips
/// monotonically from wrong to correct as `p_a` rises (common random
/// numbers), so the sweep isolates the accuracy effect instead of mixing it
/// with independent sampling noise.
pub fn noise_sweep(
    g: &Graph,
    y_true: &[usize],
    pa_list: &[f64],
    n_lfs: usize,
    coverage: f64,
    cfg: &TrainConfig,
) -> Result<SweepReport> {
    cfg.validate()?;
    if pa_list.is_empty() {
        return Err(CoreError::InvalidParameter {
            name: "pa_list",
            message: "need at least one accuracy level".into(),
        });
    }
    let n_classes = infer_n_classes(y_true)?;
    let started = Instant::now();
    let lf_seed = derive_seed(cfg.seed, "sweep-lfs", &[]);
    let mut rows = Vec::with_capacity(pa_list.len());
    for &p_a in pa_list {
        let lf_cfg = LfSynthConfig { n_lfs, accuracy: p_a, coverage, seed: lf_seed };
        let wlm = generate_synthetic_lfs(y_true, n_classes, &lf_cfg)?;
        let agg = majority_vote(&wlm);
        let (mut hits, mut covered) = (0usize, 0usize);
        for (i, &label) in agg.labels().iter().enumerate() {
            if label >= 0 {
                covered += 1;
                if label as usize == y_true[i] {
                    hits += 1;
                }
            }
        }
        let mv_label_accuracy =
            if covered == 0 { 0.0 } else { hits as f64 / covered as f64 };

        let wsnet = run_experiment(g, &wlm, y_true, cfg)?;
        let baseline = majority_vote_baseline(g, &wlm, y_true, cfg)?;
        rows.push(SweepRow {
            p_a,
            wsnet_mean_f1: wsnet.mean_f1,
            wsnet_std_f1: wsnet.std_f1,
            wsnet_fold_f1: wsnet.fold_f1,
            baseline_mean_f1: baseline.mean_f1,
            baseline_std_f1: baseline.std_f1,
            baseline_fold_f1: baseline.fold_f1,
            mv_label_accuracy,
        });
    }
    Ok(SweepReport {
        rows,
        n_lfs,
        coverage,
        config_hash: cfg.config_hash(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

fn infer_n_classes(y_true: &[usize]) -> Result<usize> {
    let max = y_true.iter().copied().max().ok_or(CoreError::EmptyGraph)?;
    if max < 1 {
        return Err(CoreError::InvalidParameter {
            name: "y_true",
            message: "need at least two classes in the label vector".into(),
        });
    }
    Ok(max + 1)
}

/// Temperature grid the contrastive defaults were searched over.
pub const DEFAULT_TAU_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 1.0];
/// Negative-sample grid the contrastive defaults were searched over.
pub const DEFAULT_R_GRID: [usize; 4] = [10, 25, 50, 100];

/// One (τ, r) combination's aggregated scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchRow {
    pub tau: f64,
    pub r: usize,
    /// Selection metric: mean over folds of the best validation F1.
    pub mean_val_f1: f64,
    pub std_val_f1: f64,
    /// Reported for reference only; selection never reads the test split.
    pub mean_test_f1: f64,
    pub std_test_f1: f64,
}

/// Grid-search outcome over the contrastive hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchReport {
    /// All combinations in τ-major order.
    pub rows: Vec<GridSearchRow>,
    /// Index into `rows` of the highest mean validation F1 (first on ties).
    pub best: usize,
    pub config_hash: String,
    pub wall_clock_secs: f64,
}

/// Runs the full protocol for every (τ, r) combination and ranks them by
/// mean best-validation F1, the metric used to pick the shipped defaults.
pub fn grid_search(
    g: &Graph,
    wlm: &WeakLabelMatrix,
    y_true: &[usize],
    cfg: &TrainConfig,
    taus: &[f64],
    rs: &[usize],
) -> Result<GridSearchReport> {
    cfg.validate()?;
    if taus.is_empty() || rs.is_empty() {
        return Err(CoreError::InvalidParameter {
            name: "grid",
            message: "need at least one τ and one r value".into(),
        });
    }
    let started = Instant::now();
    let mut rows = Vec::with_capacity(taus.len() * rs.len());
    for &tau in taus {
        for &r in rs {
            let variant = TrainConfig { tau, r, ..cfg.clone() };
            let report = run_experiment(g, wlm, y_true, &variant)?;
            let val: Vec<f64> = report.folds.iter().map(|f| f.best_val_f1).collect();
            let (mean_val_f1, std_val_f1) = mean_std(&val);
            rows.push(GridSearchRow {
                tau,
                r,
                mean_val_f1,
                std_val_f1,
                mean_test_f1: report.mean_f1,
                std_test_f1: report.std_f1,
            });
        }
    }
    let best = rows
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.mean_val_f1
                .partial_cmp(&b.mean_val_f1)
                .expect("validation F1 is finite")
                .then(ib.cmp(ia))
        })
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    Ok(GridSearchReport {
        rows,
        best,
        config_hash: cfg.config_hash(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

/// One ablation configuration's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub flags: AblationFlags,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub fold_f1: Vec<f64>,
}

/// Table of the seven ablation configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    pub config_hash: String,
    pub wall_clock_secs: f64,
}

/// The seven configurations an ablation sweeps: the full objective, each
/// component removed, and each component alone.
pub const ABLATION_CONFIGS: [(&str, AblationFlags); 7] = [
    ("full", AblationFlags { scon: true, wlce: true, wlcon: true }),
    ("-l_scon", AblationFlags { scon: false, wlce: true, wlcon: true }),
    ("-l_wlce", AblationFlags { scon: true, wlce: false, wlcon: true }),
    ("-l_wlcon", AblationFlags { scon: true, wlce: true, wlcon: false }),
    ("+l_scon", AblationFlags { scon: true, wlce: false, wlcon: false }),
    ("+l_wlce", AblationFlags { scon: false, wlce: true, wlcon: false }),
    ("+l_wlcon", AblationFlags { scon: false, wlce: false, wlcon: true }),
];

/// Runs the full protocol once per ablation configuration.
pub fn ablate(
    g: &Graph,
    wlm: &WeakLabelMatrix,
    y_true: &[usize],
    cfg: &TrainConfig,
) -> Result<AblationReport> {
    cfg.validate()?;
    let started = Instant::now();
    let mut rows = Vec::with_capacity(ABLATION_CONFIGS.len());
    for (label, flags) in ABLATION_CONFIGS {
        let variant = TrainConfig { ablation: flags, ..cfg.clone() };
        let report = run_experiment(g, wlm, y_true, &variant)?;
        rows.push(AblationRow {
            label: label.to_string(),
            flags,
            mean_f1: report.mean_f1,
            std_f1: report.std_f1,
            fold_f1: report.fold_f1,
        });
    }
    Ok(AblationReport {
        rows,
        config_hash: cfg.config_hash(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

/// Stochastic-block-model benchmark parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub n_nodes: usize,
    pub n_classes: usize,
    /// Within-class edge probability.
    pub p_in: f64,
    /// Cross-class edge probability.
    pub p_out: f64,
    /// Standard deviation of the Gaussian noise added to one-hot features.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    /// The desk-scale acceptance benchmark: 300 nodes, 3 balanced classes,
    /// assortative with p_in = 0.10 and p_out = 0.01, noisy one-hot
    /// features.
    fn default() -> Self {
        Self { n_nodes: 300, n_classes: 3, p_in: 0.10, p_out: 0.01, noise_sigma: 1.0, seed: 7 }
    }
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(CoreError::InvalidParameter {
                name: "n_classes",
                message: format!("need at least 2 classes, got {}", self.n_classes),
            });
        }
        if self.n_nodes < 2 * self.n_classes {
            return Err(CoreError::InvalidParameter {
                name: "n_nodes",
                message: format!(
                    "{} nodes cannot host {} classes with at least 2 nodes each",
                    self.n_nodes, self.n_classes
                ),
            });
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(CoreError::InvalidParameter {
                    name,
                    message: format!("edge probability must be in [0, 1], got {p}"),
                });
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "noise_sigma",
                message: format!("must be non-negative, got {}", self.noise_sigma),
            });
        }
        Ok(())
    }
}

/// Samples a stochastic block model with contiguous near-equal classes and
/// features `one_hot(class) + N(0, σ²)` per entry. Returns the graph and
/// ground-truth labels.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<(Graph, Vec<usize>)> {
    cfg.validate()?;
    let (n, k) = (cfg.n_nodes, cfg.n_classes);
    let y: Vec<usize> = (0..n).map(|i| i * k / n).collect();
    let mut rng = crate::rng::rng_from(cfg.seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if y[i] == y[j] { cfg.p_in } else { cfg.p_out };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let mut features = Array2::zeros((n, k));
    for (i, &label) in y.iter().enumerate() {
        features[[i, label]] = 1.0;
    }
    if cfg.noise_sigma > 0.0 {
        let normal = rand_distr::Normal::new(0.0, cfg.noise_sigma).map_err(|_| {
            CoreError::InvalidParameter {
                name: "noise_sigma",
                message: "invalid normal distribution parameter".into(),
            }
        })?;
        for v in features.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    let graph = Graph::build(&edges, features)?;
    Ok((graph, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tiny_benchmark() -> (Graph, Vec<usize>, WeakLabelMatrix) {
        let sbm = SbmConfig {
            n_nodes: 24,
            n_classes: 2,
            p_in: 0.5,
            p_out: 0.05,
            noise_sigma: 0.3,
            seed: 5,
        };
        let (g, y) = generate_sbm(&sbm).unwrap();
        let lf = LfSynthConfig { n_lfs: 3, accuracy: 1.0, coverage: 1.0, seed: 9 };
        let wlm = generate_synthetic_lfs(&y, 2, &lf).unwrap();
        (g, y, wlm)
    }

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            epochs: 6,
            r: 3,
            hidden1: 8,
            embedding: 4,
            n_folds: 2,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    // ---------- splits ----------

    #[test]
    fn splits_have_documented_sizes_and_partition_the_nodes() {
        let folds = make_splits(10, &SplitFractions::default(), 3, 1).unwrap();
        for f in &folds {
            assert_eq!((f.train.len(), f.val.len(), f.test.len()), (8, 1, 1));
            let mut all: Vec<usize> =
                f.train.iter().chain(&f.val).chain(&f.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn splits_are_seeded_and_independent() {
        let a = make_splits(1000, &SplitFractions::default(), 5, 42).unwrap();
        let b = make_splits(1000, &SplitFractions::default(), 5, 42).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x, y);
        }
        // Independent folds differ pairwise with overwhelming probability.
        for i in 0..a.len() {
            for j in (i + 1)..a.len() {
                assert_ne!(a[i].train, a[j].train, "folds {i} and {j} coincide");
            }
        }
    }

    #[test]
    fn splits_reject_impossible_sizes() {
        assert!(matches!(
            make_splits(5, &SplitFractions::default(), 1, 1),
            Err(CoreError::SplitTooSmall { .. })
        ));
        let bad = SplitFractions { train: 0.5, val: 0.2, test: 0.2 };
        assert!(make_splits(100, &bad, 1, 1).is_err());
    }

    // ---------- SBM ----------

    #[test]
    fn sbm_classes_are_balanced_and_deterministic() {
        let cfg = SbmConfig::default();
        let (g1, y1) = generate_sbm(&cfg).unwrap();
        let (g2, y2) = generate_sbm(&cfg).unwrap();
        assert_eq!(y1, y2);
        assert_eq!(g1.edges(), g2.edges());
        assert_eq!(g1.features(), g2.features());
        for c in 0..3 {
            assert_eq!(y1.iter().filter(|&&y| y == c).count(), 100);
        }
        assert_eq!(g1.features().dim(), (300, 3));
    }

    #[test]
    fn sbm_extremes_produce_within_class_cliques_only() {
        let cfg = SbmConfig {
            n_nodes: 6,
            n_classes: 2,
            p_in: 1.0,
            p_out: 0.0,
            noise_sigma: 0.0,
            seed: 1,
        };
        let (g, y) = generate_sbm(&cfg).unwrap();
        for i in 0..6 {
            for j in (i + 1)..6 {
                assert_eq!(g.has_edge(i, j), y[i] == y[j]);
            }
        }
        // σ = 0 leaves exact one-hot features.
        for (i, &label) in y.iter().enumerate() {
            assert_eq!(g.features()[[i, label]], 1.0);
            assert_eq!(g.features().row(i).sum(), 1.0);
        }
    }

    #[test]
    fn sbm_rejects_bad_parameters() {
        let bad = SbmConfig { p_in: 1.5, ..SbmConfig::default() };
        assert!(generate_sbm(&bad).is_err());
        let bad = SbmConfig { n_classes: 1, ..SbmConfig::default() };
        assert!(generate_sbm(&bad).is_err());
    }

    // ---------- train ----------

    #[test]
    fn train_is_deterministic_and_logs_every_epoch() {
        let (g, y, wlm) = tiny_benchmark();
        let cfg = tiny_config();
        let split = &make_splits(g.n_nodes(), &cfg.fractions, 1, cfg.seed).unwrap()[0];
        let a = train(&g, &wlm, &y, split, &cfg, 77).unwrap();
        let b = train(&g, &wlm, &y, split, &cfg, 77).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.params, b.params);
        assert_eq!(a.report.curves.len(), cfg.epochs);
        for (i, rec) in a.report.curves.iter().enumerate() {
            assert_eq!(rec.epoch, i);
            assert!(rec.total.is_finite());
            assert_abs_diff_eq!(
                rec.total,
                rec.l_scon + rec.l_wlce + rec.l_wlcon,
                epsilon = 1e-12
            );
        }
        assert!(a.report.best_val_f1 >= 0.0);
    }

    #[test]
    fn train_without_label_loss_still_runs() {
        let (g, y, wlm) = tiny_benchmark();
        let cfg = TrainConfig {
            ablation: AblationFlags { scon: true, wlce: false, wlcon: true },
            ..tiny_config()
        };
        let split = &make_splits(g.n_nodes(), &cfg.fractions, 1, cfg.seed).unwrap()[0];
        let out = train(&g, &wlm, &y, split, &cfg, 1).unwrap();
        for rec in &out.report.curves {
            assert_eq!(rec.l_wlce, 0.0);
            assert!(rec.l_scon > 0.0);
        }
    }

    #[test]
    fn train_reports_divergence_with_epoch() {
        let (g, y, wlm) = tiny_benchmark();
        // A subnormal temperature overflows 1/τ and with it every scaled
        // similarity on the first epoch.
        let cfg = TrainConfig { tau: 1e-310, ..tiny_config() };
        let split = &make_splits(g.n_nodes(), &cfg.fractions, 1, cfg.seed).unwrap()[0];
        match train(&g, &wlm, &y, split, &cfg, 1) {
            Err(CoreError::Divergence { epoch, detail }) => {
                assert_eq!(epoch, 0);
                assert!(!detail.is_empty());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn train_validates_inputs() {
        let (g, y, wlm) = tiny_benchmark();
        let cfg = tiny_config();
        let split = &make_splits(g.n_nodes(), &cfg.fractions, 1, cfg.seed).unwrap()[0];
        // Mismatched label vector.
        assert!(train(&g, &wlm, &y[..10], split, &cfg, 1).is_err());
        // Empty validation set.
        let broken = SplitIndices { train: split.train.clone(), val: vec![], test: split.test.clone() };
        assert!(matches!(
            train(&g, &wlm, &y, &broken, &cfg, 1),
            Err(CoreError::EmptySplit)
        ));
        // All losses disabled is a config error.
        let none = TrainConfig {
            ablation: AblationFlags { scon: false, wlce: false, wlcon: false },
            ..tiny_config()
        };
        assert!(matches!(
            train(&g, &wlm, &y, split, &none, 1),
            Err(CoreError::AllLossesDisabled)
        ));
    }

    // ---------- evaluate ----------

    #[test]
    fn evaluate_degenerate_predictor_matches_hand_f1() {
        // Zero weights force identical logits everywhere; bc breaks the tie.
        let (g, y, _) = tiny_benchmark();
        let dims = ModelDims {
            n_features: g.feature_dim(),
            hidden1: 4,
            embedding: 3,
            n_classes: 2,
        };
        let mut params = EncoderParams::init(dims, 1).unwrap();
        for p in params.as_mut_slice() {
            p.fill(0.0);
        }
        params.bc[[0, 0]] = 5.0; // always predict class 0
        let all: Vec<usize> = (0..g.n_nodes()).collect();
        let eval = evaluate(&params, &g, &y, &all).unwrap();
        // Balanced 2-class labels, all-one-class predictions: F1 of the
        // predicted class is 2/3, the other 0 → weighted F1 = 1/3.
        assert_abs_diff_eq!(eval.weighted_f1, 1.0 / 3.0, epsilon = 1e-12);

        // Perfect predictions on a single-class subset score 1.
        let class0: Vec<usize> = (0..g.n_nodes()).filter(|&i| y[i] == 0).collect();
        let eval = evaluate(&params, &g, &y, &class0).unwrap();
        assert_abs_diff_eq!(eval.weighted_f1, 1.0, epsilon = 1e-12);

        assert!(matches!(
            evaluate(&params, &g, &y, &[]),
            Err(CoreError::EmptySplit)
        ));
    }

    // ---------- experiment drivers ----------

    #[test]
    fn run_experiment_aggregates_folds() {
        let (g, y, wlm) = tiny_benchmark();
        let cfg = TrainConfig { n_folds: 3, epochs: 4, ..tiny_config() };
        let report = run_experiment(&g, &wlm, &y, &cfg).unwrap();
        assert_eq!(report.fold_f1.len(), 3);
        assert_eq!(report.folds.len(), 3);
        let min = report.fold_f1.iter().copied().fold(f64::INFINITY, f64::min);
        let max = report.fold_f1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(report.mean_f1 >= min && report.mean_f1 <= max);
        // Two-pass std oracle.
        let mean = report.fold_f1.iter().sum::<f64>() / 3.0;
        let var =
            report.fold_f1.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0;
        assert_abs_diff_eq!(report.std_f1, var.sqrt(), epsilon = 1e-15);
        assert!(report.wall_clock_secs > 0.0);
        assert_eq!(report.config_hash, cfg.config_hash());
        for (i, f) in report.folds.iter().enumerate() {
            assert_eq!(f.fold, i);
        }
    }

    #[test]
    fn config_hash_tracks_hyperparameters() {
        let a = TrainConfig::default();
        let b = TrainConfig { tau: 0.5, ..TrainConfig::default() };
        let c = TrainConfig::default();
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn ablation_emits_seven_labelled_rows() {
        let (g, y, wlm) = tiny_benchmark();
        let cfg = TrainConfig { epochs: 2, n_folds: 2, ..tiny_config() };
        let table = ablate(&g, &wlm, &y, &cfg).unwrap();
        assert_eq!(table.rows.len(), 7);
        let labels: Vec<&str> = table.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(
            labels,
            ["full", "-l_scon", "-l_wlce", "-l_wlcon", "+l_scon", "+l_wlce", "+l_wlcon"]
        );
        for row in &table.rows {
            assert_eq!(row.fold_f1.len(), 2);
        }
    }

    #[test]
    fn sweep_emits_one_row_per_accuracy_level() {
        let (g, y, _) = tiny_benchmark();
        let cfg = TrainConfig { epochs: 3, n_folds: 2, ..tiny_config() };
        let sweep = noise_sweep(&g, &y, &[0.6, 1.0], 3, 0.9, &cfg).unwrap();
        assert_eq!(sweep.rows.len(), 2);
        for row in &sweep.rows {
            assert_eq!(row.wsnet_fold_f1.len(), 2);
            assert_eq!(row.baseline_fold_f1.len(), 2);
            assert!(row.mv_label_accuracy > 0.0);
        }
        // Perfect labeling functions aggregate to perfect labels.
        assert_abs_diff_eq!(sweep.rows[1].mv_label_accuracy, 1.0, epsilon = 1e-12);
        assert!(noise_sweep(&g, &y, &[], 3, 0.9, &cfg).is_err());
    }

    #[test]
    fn grid_search_ranks_by_validation_score() {
        let (g, y, wlm) = tiny_benchmark();
        let cfg = TrainConfig { epochs: 3, n_folds: 2, ..tiny_config() };
        let grid = grid_search(&g, &wlm, &y, &cfg, &[0.5, 5.0], &[2, 4]).unwrap();
        assert_eq!(grid.rows.len(), 4);
        assert_eq!((grid.rows[0].tau, grid.rows[0].r), (0.5, 2));
        assert_eq!((grid.rows[3].tau, grid.rows[3].r), (5.0, 4));
        let best = &grid.rows[grid.best];
        for row in &grid.rows {
            assert!(row.mean_val_f1 <= best.mean_val_f1);
        }
        // A grid row must match a direct run with the same combination.
        let direct =
            run_experiment(&g, &wlm, &y, &TrainConfig { tau: 0.5, r: 2, ..cfg.clone() })
                .unwrap();
        assert_eq!(grid.rows[0].mean_test_f1, direct.mean_f1);
        assert!(grid_search(&g, &wlm, &y, &cfg, &[], &[2]).is_err());
    }

    #[test]
    fn baseline_equals_uniform_wlce_only_configuration() {
        let (g, y, wlm) = tiny_benchmark();
        let cfg = TrainConfig { epochs: 3, n_folds: 2, ..tiny_config() };
        let via_helper = majority_vote_baseline(&g, &wlm, &y, &cfg).unwrap();
        let manual = TrainConfig {
            ablation: AblationFlags { scon: false, wlce: true, wlcon: false },
            rho_uniform: true,
            ..cfg
        };
        let via_config = run_experiment(&g, &wlm, &y, &manual).unwrap();
        assert_eq!(via_helper.fold_f1, via_config.fold_f1);
        for (a, b) in via_helper.folds.iter().zip(&via_config.folds) {
            assert_eq!(a.curves, b.curves);
        }
    }
}
