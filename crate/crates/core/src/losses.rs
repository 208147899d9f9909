//! The three training-objective components and their combination.
//!
//! * [`compute_rho`] — per-node reliability weights mixing cluster size,
//!   similarity to the node's cluster centroid, and vote-agreement entropy.
//! * [`wlce_loss`] — ρ-weighted cross-entropy against aggregated weak labels.
//! * [`build_contrast_batch`] / [`wlcon_loss`] — InfoNCE over weak-label
//!   positives and non-neighbor negatives.
//! * [`scon_loss`] — discrimination of real vs corrupted nodes against their
//!   community summary embedding.
//! * [`total_loss`] — unit-coefficient sum of whichever components an
//!   ablation leaves enabled.
//!
//! ρ weights and batch composition are discrete inputs refreshed once per
//! epoch: they enter the tape as constants, so gradients flow only through
//! the embeddings and classifier probabilities.

use crate::autodiff::{Tape, TensorId};
use crate::cluster::{pool_centroids, Partition};
use crate::graph::Graph;
use crate::rng::component_rng;
use crate::sparse::CsrMatrix;
use crate::weak::{vote_entropy, weak_label_similarity, AggregatedLabels, WeakLabelMatrix};
use crate::{error::CoreError, Result};
use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Probability floor inside cross-entropy logs.
pub const LOG_EPS: f64 = 1e-12;

/// Direction in which vote entropy enters the ρ weight.
///
/// The verbatim formula multiplies by raw entropy, which zeroes ρ for
/// unanimously labeled nodes (and with it the supervised gradient when
/// labeling functions are accurate). `OneMinusNormalizedEntropy` rewards
/// agreement instead: `1 − H(Λ_i)/ln C ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoEntropyMode {
    /// Multiply by raw vote entropy (natural log).
    Entropy,
    /// Multiply by `1 − H(Λ_i)/ln C` so unanimous nodes weigh most.
    OneMinusNormalizedEntropy,
}

/// Knobs for [`compute_rho`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoSettings {
    pub entropy_mode: RhoEntropyMode,
    /// Map cosine similarities through `(1+cos)/2` before normalizing, so
    /// the denominator is a sum of non-negative terms. With the raw mode,
    /// negative similarities are clamped to zero to keep ρ non-negative.
    pub cosine_shift: bool,
}

impl Default for RhoSettings {
    fn default() -> Self {
        Self { entropy_mode: RhoEntropyMode::OneMinusNormalizedEntropy, cosine_shift: true }
    }
}

/// Per-node reliability weights with their factor-by-factor diagnostics.
#[derive(Debug, Clone)]
pub struct RhoWeights {
    rho: Vec<f64>,
    cluster_sizes: Vec<usize>,
    centroid_similarity: Vec<f64>,
    entropy_term: Vec<f64>,
    denominator: f64,
    degenerate_denominator: bool,
}

impl RhoWeights {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.rho
    }

    /// Size of the cluster each node belongs to (`|Q_i|`).
    pub fn cluster_sizes(&self) -> &[usize] {
        &self.cluster_sizes
    }

    /// Per-node similarity to its cluster centroid, after the configured
    /// shift/clamp.
    pub fn centroid_similarity(&self) -> &[f64] {
        &self.centroid_similarity
    }

    /// Per-node entropy factor in the configured direction.
    pub fn entropy_term(&self) -> &[f64] {
        &self.entropy_term
    }

    /// Normalizer `Σ_j sim_j` the similarity ratio used.
    pub fn denominator(&self) -> f64 {
        self.denominator
    }

    /// True when the similarity mass was zero and the ratio fell back to
    /// uniform `1/N`.
    pub fn degenerate_denominator(&self) -> bool {
        self.degenerate_denominator
    }
}

fn cosine(u: ArrayView1<f64>, v: ArrayView1<f64>) -> Option<f64> {
    let nu = u.dot(&u).sqrt();
    let nv = v.dot(&v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return None;
    }
    Some(u.dot(&v) / (nu * nv))
}

/// Computes per-node weights
/// `ρ_i = |Q_i| · sim(h_i, h_{Q_i}) / Σ_j sim(h_j, h_{Q_j}) · E(Λ_i)`,
/// where `Q_i` is node `i`'s cluster, `h_{Q_i}` the mean embedding of that
/// cluster, `sim` cosine similarity (shifted per settings), and `E` the
/// entropy factor in the configured direction.
///
/// Nodes whose every labeling function abstained get ρ = 0. Zero-norm
/// embeddings have undefined cosine similarity and contribute 0 to both the
/// numerator and denominator; if the whole denominator vanishes the ratio
/// falls back to uniform `1/N` and the result is flagged via
/// [`RhoWeights::degenerate_denominator`].
pub fn compute_rho(
    embeddings: ArrayView2<f64>,
    clusters: &Partition,
    wlm: &WeakLabelMatrix,
    settings: &RhoSettings,
) -> Result<RhoWeights> {
    let n = embeddings.nrows();
    if clusters.len() != n {
        return Err(CoreError::DimensionMismatch {
            context: "rho cluster assignment length",
            expected: n,
            actual: clusters.len(),
        });
    }
    if wlm.n_nodes() != n {
        return Err(CoreError::DimensionMismatch {
            context: "rho weak-label row count",
            expected: n,
            actual: wlm.n_nodes(),
        });
    }
    if n == 0 {
        return Err(CoreError::EmptyGraph);
    }
    let centroids = pool_centroids(embeddings, clusters)?;
    let sizes = clusters.group_sizes();

    let mut similarity = Vec::with_capacity(n);
    for i in 0..n {
        let raw = cosine(embeddings.row(i), centroids.row(clusters.group_of(i)));
        let s = match (raw, settings.cosine_shift) {
            (Some(c), true) => (1.0 + c) / 2.0,
            (Some(c), false) => c.max(0.0),
            (None, _) => 0.0,
        };
        similarity.push(s);
    }
    let denominator: f64 = similarity.iter().sum();
    let degenerate = denominator <= LOG_EPS;

    let ln_c = (wlm.n_classes() as f64).ln();
    let mut entropy_term = Vec::with_capacity(n);
    let mut cluster_sizes = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    for i in 0..n {
        let h = vote_entropy(wlm, i);
        let e = match settings.entropy_mode {
            RhoEntropyMode::Entropy => h,
            RhoEntropyMode::OneMinusNormalizedEntropy => (1.0 - h / ln_c).max(0.0),
        };
        entropy_term.push(e);
        let size = sizes[clusters.group_of(i)];
        cluster_sizes.push(size);
        let ratio = if degenerate { 1.0 / n as f64 } else { similarity[i] / denominator };
        let weight = if wlm.is_covered(i) { size as f64 * ratio * e } else { 0.0 };
        if !weight.is_finite() || weight < 0.0 {
            return Err(CoreError::NonFinite { op: "compute_rho" });
        }
        rho.push(weight);
    }
    Ok(RhoWeights {
        rho,
        cluster_sizes,
        centroid_similarity: similarity,
        entropy_term,
        denominator,
        degenerate_denominator: degenerate,
    })
}

/// ρ-weighted cross-entropy between predicted class probabilities and
/// aggregated weak labels.
///
/// `weights` is the effective per-node coefficient — typically ρ with the
/// training-split mask already applied (zero elsewhere). Nodes with an
/// abstain label (−1) or zero weight contribute nothing. The sum is divided
/// by `normalizer`, the size of the averaged node set (the training split),
/// independent of how many weights are zero.
///
/// Returns the scalar loss node and the number of probabilities that hit
/// the `1e-12` log clamp.
pub fn wlce_loss(
    tape: &mut Tape,
    predictions: TensorId,
    agg: &AggregatedLabels,
    weights: &[f64],
    normalizer: usize,
) -> Result<(TensorId, usize)> {
    let (n, c) = {
        let v = tape.value(predictions);
        (v.nrows(), v.ncols())
    };
    if agg.labels().len() != n || weights.len() != n {
        return Err(CoreError::DimensionMismatch {
            context: "wlce label/weight length",
            expected: n,
            actual: agg.labels().len().min(weights.len()),
        });
    }
    if normalizer == 0 {
        return Err(CoreError::EmptySplit);
    }
    let mut cols = Vec::with_capacity(n);
    let mut coeff = Array2::zeros((n, 1));
    for i in 0..n {
        let label = agg.label(i);
        let w = weights[i];
        if !(w.is_finite() && w >= 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "weights",
                message: format!("weight {w} at node {i} is not a finite non-negative value"),
            });
        }
        if label < 0 || w == 0.0 {
            cols.push(0);
            continue;
        }
        let label = label as usize;
        if label >= c {
            return Err(CoreError::InvalidParameter {
                name: "agg",
                message: format!("label {label} at node {i} outside {c} classes"),
            });
        }
        cols.push(label);
        coeff[[i, 0]] = -w / normalizer as f64;
    }
    let picked = tape.pick_per_row(predictions, Arc::new(cols))?;
    let (logs, clamped) = tape.log_clamped(picked, LOG_EPS)?;
    let coeff = tape.constant(coeff)?;
    let weighted = tape.mul_elem(logs, coeff)?;
    let loss = tape.sum_all(weighted)?;
    Ok((loss, clamped))
}

/// One epoch's contrastive pairing: per anchor a positive and `r` negatives.
#[derive(Debug, Clone)]
pub struct ContrastBatch {
    anchors: Vec<usize>,
    positives: Vec<usize>,
    negatives: Vec<Vec<usize>>,
    /// Anchors whose negative pool was empty (fully connected neighborhoods)
    /// and fell back to sampling among neighbors.
    fallback: Vec<bool>,
    tau: f64,
    temperature_in_exponent: bool,
}

impl ContrastBatch {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    pub fn positives(&self) -> &[usize] {
        &self.positives
    }

    pub fn negatives(&self) -> &[Vec<usize>] {
        &self.negatives
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Count of anchors that used the fully-connected fallback pool.
    pub fn fallback_count(&self) -> usize {
        self.fallback.iter().filter(|&&f| f).count()
    }

    pub fn used_fallback(&self, idx: usize) -> bool {
        self.fallback[idx]
    }
}

/// Highest-similarity positive for `i` among `candidates`.
///
/// The candidate pool is the anchor set itself (training-split covered
/// nodes), which keeps validation/test weak labels out of pair selection.
/// Ties resolve to the lowest index; an uncovered anchor — or an anchor with
/// no other candidate — falls back to a seeded uniform draw (over the
/// remaining candidates, or over all other nodes when none remain).
pub fn top_positive_among(
    wlm: &WeakLabelMatrix,
    i: usize,
    candidates: &[usize],
    seed: u64,
) -> usize {
    let mut pool = candidates.iter().copied().filter(|&j| j != i);
    let first = pool.next();
    if first.is_none() {
        // No candidate but the anchor itself: any other node works as a
        // (contentless) positive.
        let mut rng = component_rng(seed, "positive-fallback", &[i as u64]);
        let j = rng.gen_range(0..wlm.n_nodes() - 1);
        return if j >= i { j + 1 } else { j };
    }
    if !wlm.is_covered(i) {
        let others: Vec<usize> = candidates.iter().copied().filter(|&j| j != i).collect();
        let mut rng = component_rng(seed, "positive-uncovered", &[i as u64]);
        return others[rng.gen_range(0..others.len())];
    }
    let mut best = first.unwrap();
    let mut best_sim = weak_label_similarity(wlm, i, best);
    for j in pool {
        let sim = weak_label_similarity(wlm, i, j);
        if sim > best_sim {
            best_sim = sim;
            best = j;
        }
    }
    best
}

/// Assembles the contrastive pairing for one epoch.
///
/// For each anchor: the positive is [`top_positive_among`] the anchors
/// themselves; negatives are `r` seeded uniform draws without replacement
/// from the anchor's non-neighbors, excluding the anchor and its positive.
/// A smaller pool is used whole; an empty pool (star centers, cliques)
/// falls back to all other nodes with the anchor flagged. Per-anchor seeds
/// derive from `seed` and the anchor id, so the batch is reproducible and
/// independent of anchor order.
pub fn build_contrast_batch(
    wlm: &WeakLabelMatrix,
    graph: &Graph,
    anchors: &[usize],
    r: usize,
    tau: f64,
    temperature_in_exponent: bool,
    seed: u64,
) -> Result<ContrastBatch> {
    let n = graph.n_nodes();
    if wlm.n_nodes() != n {
        return Err(CoreError::DimensionMismatch {
            context: "contrast batch weak-label row count",
            expected: n,
            actual: wlm.n_nodes(),
        });
    }
    if r == 0 {
        return Err(CoreError::InvalidParameter {
            name: "r",
            message: "need at least one negative per anchor".into(),
        });
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "tau",
            message: format!("temperature must be positive and finite, got {tau}"),
        });
    }
    if n < 2 {
        return Err(CoreError::InvalidParameter {
            name: "graph",
            message: "contrastive pairs need at least 2 nodes".into(),
        });
    }
    if let Some(&bad) = anchors.iter().find(|&&a| a >= n) {
        return Err(CoreError::InvalidParameter {
            name: "anchors",
            message: format!("anchor {bad} outside graph with {n} nodes"),
        });
    }

    let mut positives = Vec::with_capacity(anchors.len());
    let mut negatives = Vec::with_capacity(anchors.len());
    let mut fallback = Vec::with_capacity(anchors.len());
    for &i in anchors {
        let pos = top_positive_among(wlm, i, anchors, seed);
        let eligible: Vec<usize> = (0..n)
            .filter(|&j| j != i && j != pos && !graph.has_edge(i, j))
            .collect();
        let (pool, used_fallback) = if eligible.is_empty() {
            ((0..n).filter(|&j| j != i && j != pos).collect::<Vec<_>>(), true)
        } else {
            (eligible, false)
        };
        let negs = if pool.len() <= r {
            pool
        } else {
            let mut rng = component_rng(seed, "wlcon-negatives", &[i as u64]);
            rand::seq::index::sample(&mut rng, pool.len(), r)
                .into_iter()
                .map(|k| pool[k])
                .collect()
        };
        positives.push(pos);
        negatives.push(negs);
        fallback.push(used_fallback);
    }
    Ok(ContrastBatch {
        anchors: anchors.to_vec(),
        positives,
        negatives,
        fallback,
        tau,
        temperature_in_exponent,
    })
}

/// InfoNCE over the batch:
/// `−mean_i log [ e^{⟨h_i, h_{i⁺}⟩/τ} / (e^{⟨h_i, h_{i⁺}⟩/τ} + Σ_j e^{⟨h_i, h_j⁻⟩/τ}) ]`,
/// evaluated as `logsumexp − positive` per anchor for stability.
///
/// When the batch was built with the temperature outside the exponent, τ
/// cancels between numerator and denominator, so the scores enter unscaled.
pub fn wlcon_loss(tape: &mut Tape, embeddings: TensorId, batch: &ContrastBatch) -> Result<TensorId> {
    if batch.is_empty() {
        return Err(CoreError::InvalidParameter {
            name: "batch",
            message: "contrastive loss needs at least one anchor".into(),
        });
    }
    let n = tape.value(embeddings).nrows();
    let max_ref = batch
        .anchors
        .iter()
        .chain(&batch.positives)
        .chain(batch.negatives.iter().flatten())
        .copied()
        .max()
        .unwrap_or(0);
    if max_ref >= n {
        return Err(CoreError::InvalidParameter {
            name: "batch",
            message: format!("batch references node {max_ref} beyond {n} embeddings"),
        });
    }

    // Group anchors by negative count so each group is a rectangular gather.
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (idx, negs) in batch.negatives.iter().enumerate() {
        groups.entry(negs.len()).or_default().push(idx);
    }
    let inv_tau = if batch.temperature_in_exponent { 1.0 / batch.tau } else { 1.0 };

    let mut per_group_sums = Vec::new();
    for (r_k, members) in groups {
        let anchor_rows: Vec<usize> = members.iter().map(|&m| batch.anchors[m]).collect();
        let pos_rows: Vec<usize> = members.iter().map(|&m| batch.positives[m]).collect();
        let a = tape.gather_rows(embeddings, Arc::new(anchor_rows))?;
        let p = tape.gather_rows(embeddings, Arc::new(pos_rows))?;
        let mut cols = vec![tape.row_dot(a, p)?];
        for k in 0..r_k {
            let neg_rows: Vec<usize> =
                members.iter().map(|&m| batch.negatives[m][k]).collect();
            let ng = tape.gather_rows(embeddings, Arc::new(neg_rows))?;
            cols.push(tape.row_dot(a, ng)?);
        }
        let scores = tape.concat_cols(&cols)?;
        let scaled = tape.scale(scores, inv_tau)?;
        let lse = tape.logsumexp_rows(scaled)?;
        let pos_col = tape.pick_per_row(scaled, Arc::new(vec![0; members.len()]))?;
        let per_anchor = tape.sub(lse, pos_col)?;
        per_group_sums.push(tape.sum_all(per_anchor)?);
    }
    let mut total = per_group_sums[0];
    for &s in &per_group_sums[1..] {
        total = tape.add(total, s)?;
    }
    tape.scale(total, 1.0 / batch.len() as f64)
}

/// Community-contrastive discrimination: real embeddings should score high
/// against their community summary, corrupted ones low:
/// `[Σ_i −log σ(⟨h_i, s_{B_i}⟩) + Σ_j −log(1 − σ(⟨h̃_j, s_{B_j}⟩))] / 2N`,
/// computed as softplus(∓score) for stability. Summaries `s_B` are mean
/// pools of the *real* embeddings over each community and stay inside the
/// gradient path.
pub fn scon_loss(
    tape: &mut Tape,
    embeddings: TensorId,
    corrupted: TensorId,
    communities: &Partition,
) -> Result<TensorId> {
    let (n, d) = {
        let v = tape.value(embeddings);
        (v.nrows(), v.ncols())
    };
    if tape.value(corrupted).dim() != (n, d) {
        return Err(CoreError::ShapeMismatch {
            op: "scon_loss",
            lhs: (n, d),
            rhs: tape.value(corrupted).dim(),
        });
    }
    if communities.len() != n {
        return Err(CoreError::DimensionMismatch {
            context: "scon community assignment length",
            expected: n,
            actual: communities.len(),
        });
    }
    // Mean-pooling matrix M (k×n): row g averages the members of group g.
    let sizes = communities.group_sizes();
    let triplets: Vec<(usize, usize, f64)> = communities
        .assignment()
        .iter()
        .enumerate()
        .map(|(i, &g)| (g, i, 1.0 / sizes[g] as f64))
        .collect();
    let pool = Arc::new(CsrMatrix::from_triplets(communities.n_groups(), n, triplets)?);
    let summaries = tape.spmm(&pool, embeddings)?;
    let per_node = tape.gather_rows(summaries, Arc::new(communities.assignment().to_vec()))?;

    let real_scores = tape.row_dot(embeddings, per_node)?;
    let corrupt_scores = tape.row_dot(corrupted, per_node)?;
    // −log σ(s) = softplus(−s); −log(1 − σ(s)) = softplus(s).
    let neg_real = tape.scale(real_scores, -1.0)?;
    let real_term = tape.softplus(neg_real)?;
    let corrupt_term = tape.softplus(corrupt_scores)?;
    let sum_real = tape.sum_all(real_term)?;
    let sum_corrupt = tape.sum_all(corrupt_term)?;
    let total = tape.add(sum_real, sum_corrupt)?;
    tape.scale(total, 1.0 / (2.0 * n as f64))
}

/// Scalar values of the per-component losses for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_scon: f64,
    pub l_wlce: f64,
    pub l_wlcon: f64,
    pub total: f64,
}

/// Unit-coefficient sum of the enabled components. A component disabled by
/// ablation is passed as `None` and contributes exactly zero; disabling
/// everything is an error.
pub fn total_loss(
    tape: &mut Tape,
    l_scon: Option<TensorId>,
    l_wlce: Option<TensorId>,
    l_wlcon: Option<TensorId>,
) -> Result<(TensorId, LossBreakdown)> {
    let parts: Vec<TensorId> =
        [l_scon, l_wlce, l_wlcon].into_iter().flatten().collect();
    if parts.is_empty() {
        return Err(CoreError::AllLossesDisabled);
    }
    let mut total = parts[0];
    for &p in &parts[1..] {
        total = tape.add(total, p)?;
    }
    let value = |id: Option<TensorId>| id.map_or(0.0, |id| tape.scalar_value(id));
    let breakdown = LossBreakdown {
        l_scon: value(l_scon),
        l_wlce: value(l_wlce),
        l_wlcon: value(l_wlcon),
        total: tape.scalar_value(total),
    };
    Ok((total, breakdown))
}
