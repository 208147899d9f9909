//! Labeling-function matrix handling.
//!
//! Weak supervision arrives as an `N×m` matrix Λ of votes from `m`
//! labeling functions: entry `Λ[i,k]` is a class in `0..C` or `-1` for an
//! abstain. This module aggregates votes by majority, measures per-node vote
//! entropy (the agreement signal behind the ρ weights), computes the
//! one-hot cosine similarity used to select contrastive positive pairs, and
//! generates synthetic matrices with controlled accuracy and coverage for
//! benchmark sweeps.

use crate::rng::rng_from;
use crate::{error::CoreError, Result};
use ndarray::{Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Vote value marking an abstaining labeling function.
pub const ABSTAIN: i32 = -1;

/// `N×m` matrix of labeling-function votes in `{-1, 0..C-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakLabelMatrix {
    votes: Array2<i32>,
    n_classes: usize,
}

impl WeakLabelMatrix {
    /// Validates vote values against the class count and wraps the matrix.
    pub fn new(votes: Array2<i32>, n_classes: usize) -> Result<Self> {
        if n_classes < 2 {
            return Err(CoreError::InvalidParameter {
                name: "n_classes",
                message: format!("need at least 2 classes, got {n_classes}"),
            });
        }
        for ((i, k), &v) in votes.indexed_iter() {
            if v != ABSTAIN && (v < 0 || v as usize >= n_classes) {
                return Err(CoreError::VoteOutOfRange {
                    node: i,
                    lf: k,
                    value: v as i64,
                    n_classes,
                });
            }
        }
        Ok(Self { votes, n_classes })
    }

    pub fn n_nodes(&self) -> usize {
        self.votes.nrows()
    }

    /// Number of labeling functions `m`.
    pub fn n_lfs(&self) -> usize {
        self.votes.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn votes(&self) -> &Array2<i32> {
        &self.votes
    }

    /// Votes of node `i` across all labeling functions.
    pub fn row(&self, i: usize) -> ArrayView1<'_, i32> {
        self.votes.row(i)
    }

    /// Count of non-abstain votes for node `i`.
    pub fn n_non_abstain(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&v| v != ABSTAIN).count()
    }

    /// True when node `i` received at least one non-abstain vote.
    pub fn is_covered(&self, i: usize) -> bool {
        self.row(i).iter().any(|&v| v != ABSTAIN)
    }

    /// Fraction of all `N·m` votes that are not abstains.
    pub fn coverage(&self) -> f64 {
        let total = self.votes.len();
        if total == 0 {
            return 0.0;
        }
        let cast = self.votes.iter().filter(|&&v| v != ABSTAIN).count();
        cast as f64 / total as f64
    }
}

/// Result of majority-vote aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedLabels {
    labels: Vec<i32>,
    tie_broken: Vec<bool>,
}

impl AggregatedLabels {
    /// Aggregated label per node; `-1` where every function abstained.
    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    /// Flags nodes whose modal vote was not unique (resolved to the lowest
    /// class index).
    pub fn tie_broken(&self) -> &[bool] {
        &self.tie_broken
    }

    pub fn label(&self, i: usize) -> i32 {
        self.labels[i]
    }
}

/// Aggregates each node's votes to the most frequent non-abstain class.
///
/// Ties resolve to the lowest class index and are flagged; nodes where
/// every function abstains aggregate to `-1`.
pub fn majority_vote(wlm: &WeakLabelMatrix) -> AggregatedLabels {
    let c = wlm.n_classes();
    let mut labels = Vec::with_capacity(wlm.n_nodes());
    let mut tie_broken = Vec::with_capacity(wlm.n_nodes());
    let mut counts = vec![0usize; c];
    for i in 0..wlm.n_nodes() {
        counts.iter_mut().for_each(|x| *x = 0);
        for &v in wlm.row(i) {
            if v != ABSTAIN {
                counts[v as usize] += 1;
            }
        }
        let best = counts.iter().copied().max().expect("n_classes >= 2");
        if best == 0 {
            labels.push(ABSTAIN);
            tie_broken.push(false);
        } else {
            let winner = counts.iter().position(|&x| x == best).expect("max exists");
            labels.push(winner as i32);
            tie_broken.push(counts.iter().filter(|&&x| x == best).count() > 1);
        }
    }
    AggregatedLabels { labels, tie_broken }
}

/// Shannon entropy (natural log) of node `i`'s non-abstain vote
/// distribution over the `C` classes. All-abstain nodes return `ln C`,
/// the maximum-uncertainty convention.
pub fn vote_entropy(wlm: &WeakLabelMatrix, node: usize) -> f64 {
    let c = wlm.n_classes();
    let mut counts = vec![0usize; c];
    let mut total = 0usize;
    for &v in wlm.row(node) {
        if v != ABSTAIN {
            counts[v as usize] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return (c as f64).ln();
    }
    let mut entropy = 0.0;
    for &k in &counts {
        if k > 0 {
            let p = k as f64 / total as f64;
            entropy -= p * p.ln();
        }
    }
    entropy
}

/// Cosine similarity between the one-hot-encoded vote vectors of nodes `i`
/// and `j`, in `[0, 1]`.
///
/// Each vote expands to a length-`C` one-hot block (abstain → zero block),
/// so the dot product counts positions where both nodes cast the same vote
/// and each norm is the square root of the node's non-abstain count. If
/// either node abstained everywhere, the similarity is 0 by convention.
pub fn weak_label_similarity(wlm: &WeakLabelMatrix, i: usize, j: usize) -> f64 {
    let (ri, rj) = (wlm.row(i), wlm.row(j));
    let mut agree = 0usize;
    let mut cast_i = 0usize;
    let mut cast_j = 0usize;
    for (&a, &b) in ri.iter().zip(rj.iter()) {
        if a != ABSTAIN {
            cast_i += 1;
        }
        if b != ABSTAIN {
            cast_j += 1;
        }
        if a != ABSTAIN && a == b {
            agree += 1;
        }
    }
    if cast_i == 0 || cast_j == 0 {
        return 0.0;
    }
    agree as f64 / ((cast_i * cast_j) as f64).sqrt()
}

/// Returns the node most similar to `i` by [`weak_label_similarity`].
///
/// Ties resolve to the lowest index. If node `i` abstained everywhere
/// (similarity 0 to all nodes), a uniformly random partner `j ≠ i` is drawn
/// from `seed` so the contrast still has a well-defined positive.
pub fn top_positive_pair(wlm: &WeakLabelMatrix, i: usize, seed: u64) -> usize {
    debug_assert!(wlm.n_nodes() >= 2, "a positive pair needs at least 2 nodes");
    if !wlm.is_covered(i) {
        let mut rng = rng_from(seed);
        let j = rng.gen_range(0..wlm.n_nodes() - 1);
        return if j >= i { j + 1 } else { j };
    }
    let mut best = usize::MAX;
    let mut best_sim = f64::NEG_INFINITY;
    for j in 0..wlm.n_nodes() {
        if j == i {
            continue;
        }
        let sim = weak_label_similarity(wlm, i, j);
        if sim > best_sim {
            best_sim = sim;
            best = j;
        }
    }
    best
}

/// Parameters for the synthetic labeling-function generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfSynthConfig {
    /// Number of labeling functions `m`.
    pub n_lfs: usize,
    /// Probability `p_a ∈ (0, 1]` that a cast vote equals the true label.
    pub accuracy: f64,
    /// Probability in `(0, 1]` that a function votes rather than abstains.
    pub coverage: f64,
    /// Seed for the generator's private randomness.
    pub seed: u64,
}

impl LfSynthConfig {
    fn validate(&self) -> Result<()> {
        if self.n_lfs == 0 {
            return Err(CoreError::InvalidParameter {
                name: "n_lfs",
                message: "need at least one labeling function".into(),
            });
        }
        if !(self.accuracy > 0.0 && self.accuracy <= 1.0) {
            return Err(CoreError::InvalidParameter {
                name: "accuracy",
                message: format!("p_a must lie in (0, 1], got {}", self.accuracy),
            });
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return Err(CoreError::InvalidParameter {
                name: "coverage",
                message: format!("coverage must lie in (0, 1], got {}", self.coverage),
            });
        }
        Ok(())
    }
}

/// Generates an `N×m` synthetic vote matrix from ground-truth labels.
///
/// Independently per `(node, function)` pair: abstain with probability
/// `1 − coverage`; otherwise vote the true label with probability `p_a`
/// and a uniformly chosen *wrong* class with probability `1 − p_a`.
///
/// Every `(node, function)` pair consumes exactly three RNG draws whatever
/// the outcome, so matrices generated from the same seed at different
/// `accuracy` values are coupled: the abstain pattern is identical and each
/// cast vote flips monotonically from wrong to correct as `accuracy` rises.
/// Sweeps over `accuracy` therefore compare nested noise realisations
/// instead of independent ones.
pub fn generate_synthetic_lfs(
    y: &[usize],
    n_classes: usize,
    cfg: &LfSynthConfig,
) -> Result<WeakLabelMatrix> {
    cfg.validate()?;
    if n_classes < 2 {
        return Err(CoreError::InvalidParameter {
            name: "n_classes",
            message: format!("need at least 2 classes, got {n_classes}"),
        });
    }
    for (i, &label) in y.iter().enumerate() {
        if label >= n_classes {
            return Err(CoreError::VoteOutOfRange {
                node: i,
                lf: 0,
                value: label as i64,
                n_classes,
            });
        }
    }
    let mut rng = rng_from(cfg.seed);
    let mut votes = Array2::from_elem((y.len(), cfg.n_lfs), ABSTAIN);
    for (i, &label) in y.iter().enumerate() {
        for k in 0..cfg.n_lfs {
            // All three draws happen unconditionally to keep the stream
            // position outcome-independent (see the coupling note above).
            let covered = rng.gen_bool(cfg.coverage);
            let correct = rng.gen_bool(cfg.accuracy);
            // Uniform over the C−1 wrong classes: draw from 0..C-1 and
            // skip past the true label.
            let w = rng.gen_range(0..n_classes - 1);
            if !covered {
                continue;
            }
            let vote = if correct {
                label
            } else if w >= label {
                w + 1
            } else {
                w
            };
            votes[[i, k]] = vote as i32;
        }
    }
    WeakLabelMatrix::new(votes, n_classes)
}

/// Mean vote entropy split by whether the majority vote matched the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// Mean entropy over correctly aggregated nodes; `None` if none exist.
    pub mean_entropy_correct: Option<f64>,
    /// Mean entropy over incorrectly aggregated nodes; `None` if none exist.
    pub mean_entropy_incorrect: Option<f64>,
    pub n_correct: usize,
    pub n_incorrect: usize,
}

/// Compares vote entropy between nodes whose aggregated label matches the
/// ground truth and nodes where it does not. All-abstain nodes are skipped;
/// an error is returned if no node is covered at all.
pub fn agreement_report(
    wlm: &WeakLabelMatrix,
    agg: &AggregatedLabels,
    y_true: &[usize],
) -> Result<AgreementReport> {
    if agg.labels().len() != wlm.n_nodes() || y_true.len() != wlm.n_nodes() {
        return Err(CoreError::DimensionMismatch {
            context: "agreement report inputs",
            expected: wlm.n_nodes(),
            actual: agg.labels().len().min(y_true.len()),
        });
    }
    let (mut sum_c, mut n_c) = (0.0, 0usize);
    let (mut sum_i, mut n_i) = (0.0, 0usize);
    for node in 0..wlm.n_nodes() {
        let label = agg.label(node);
        if label == ABSTAIN {
            continue;
        }
        let e = vote_entropy(wlm, node);
        if label as usize == y_true[node] {
            sum_c += e;
            n_c += 1;
        } else {
            sum_i += e;
            n_i += 1;
        }
    }
    if n_c + n_i == 0 {
        return Err(CoreError::InvalidParameter {
            name: "weak label matrix",
            message: "no covered nodes to compare".into(),
        });
    }
    Ok(AgreementReport {
        mean_entropy_correct: (n_c > 0).then(|| sum_c / n_c as f64),
        mean_entropy_incorrect: (n_i > 0).then(|| sum_i / n_i as f64),
        n_correct: n_c,
        n_incorrect: n_i,
    })
}
