//! Partitions, k-means clustering, and centroid pooling.
//!
//! Two partitions drive the training objective: graph communities (the
//! pooling units of the structural contrast) and k-means clusters over the
//! current embeddings (the `Q_i` groups inside the ρ node weights, with
//! `k = C`). Both are represented by [`Partition`]; this module implements
//! the k-means side plus the group-mean pooling shared by both consumers.

use crate::rng::rng_from;
use crate::{error::CoreError, Result};
use ndarray::{Array2, ArrayView2};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

/// What a partition's groups represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    /// Graph communities `B` from modularity maximization.
    Community,
    /// Embedding clusters `Q` from k-means.
    Cluster,
}

/// Node-to-group assignment with compact group ids `0..n_groups`, every
/// group non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    n_groups: usize,
    kind: PartitionKind,
}

impl Partition {
    /// Wraps an assignment after checking compactness: group ids must cover
    /// `0..max_id+1` with no empty group.
    pub fn new(assignment: Vec<usize>, kind: PartitionKind) -> Result<Self> {
        if assignment.is_empty() {
            return Err(CoreError::InvalidParameter {
                name: "assignment",
                message: "partition of zero nodes".into(),
            });
        }
        let n_groups = assignment.iter().max().expect("nonempty") + 1;
        let mut seen = vec![false; n_groups];
        for &g in &assignment {
            seen[g] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(CoreError::InvalidParameter {
                name: "assignment",
                message: format!("group {missing} of {n_groups} is empty"),
            });
        }
        Ok(Self { assignment, n_groups, kind })
    }

    /// Renumbers arbitrary labels to compact ids in order of first
    /// appearance, then wraps them.
    pub fn from_labels(labels: &[usize], kind: PartitionKind) -> Result<Self> {
        let mut remap = std::collections::HashMap::new();
        let mut assignment = Vec::with_capacity(labels.len());
        for &l in labels {
            let next = remap.len();
            assignment.push(*remap.entry(l).or_insert(next));
        }
        Self::new(assignment, kind)
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    /// Group id of node `i`.
    pub fn group_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Number of members per group.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n_groups];
        for &g in &self.assignment {
            sizes[g] += 1;
        }
        sizes
    }

    /// Member node indices, grouped by group id.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_groups];
        for (i, &g) in self.assignment.iter().enumerate() {
            out[g].push(i);
        }
        out
    }
}

/// Per-group arithmetic-mean embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    means: Array2<f64>,
}

impl Centroids {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.means
    }

    pub fn n_groups(&self) -> usize {
        self.means.nrows()
    }

    /// Mean embedding of group `g`.
    pub fn row(&self, g: usize) -> ndarray::ArrayView1<'_, f64> {
        self.means.row(g)
    }
}

/// Mean-pools embedding rows per partition group.
pub fn pool_centroids(embeddings: ArrayView2<f64>, part: &Partition) -> Result<Centroids> {
    if embeddings.nrows() != part.len() {
        return Err(CoreError::DimensionMismatch {
            context: "centroid pooling",
            expected: part.len(),
            actual: embeddings.nrows(),
        });
    }
    let mut means = Array2::zeros((part.n_groups(), embeddings.ncols()));
    for (i, &g) in part.assignment().iter().enumerate() {
        means.row_mut(g).scaled_add(1.0, &embeddings.row(i));
    }
    for (g, size) in part.group_sizes().into_iter().enumerate() {
        means.row_mut(g).mapv_inplace(|v| v / size as f64);
    }
    Ok(Centroids { means })
}

/// Output of one k-means run.
#[derive(Debug, Clone)]
pub struct KmeansOutcome {
    pub partition: Partition,
    pub centroids: Centroids,
    /// Within-cluster sum of squared distances after each assignment pass.
    pub sse_history: Vec<f64>,
    pub n_iterations: usize,
}

const KMEANS_MAX_ITERS: usize = 100;
const KMEANS_SHIFT_TOL: f64 = 1e-6;

/// Lloyd's algorithm with k-means++ seeding.
///
/// Runs at most 100 iterations or until the largest centroid shift drops
/// below `1e-6`. Clusters that empty out are re-seeded from the point
/// currently farthest from its assigned centroid, so the returned partition
/// always has `k` non-empty groups. Deterministic given `seed`.
pub fn kmeans(embeddings: ArrayView2<f64>, k: usize, seed: u64) -> Result<KmeansOutcome> {
    let n = embeddings.nrows();
    if k == 0 {
        return Err(CoreError::InvalidParameter {
            name: "k",
            message: "cluster count must be positive".into(),
        });
    }
    if k > n {
        return Err(CoreError::TooFewPoints { n_points: n, k });
    }
    let mut rng = rng_from(seed);
    let mut centroids = plus_plus_seed(embeddings, k, &mut rng);
    let mut assignment = vec![0usize; n];
    let mut sse_history = Vec::new();
    let mut n_iterations = 0;

    for _ in 0..KMEANS_MAX_ITERS {
        n_iterations += 1;
        // Assignment step: nearest centroid, ties toward the lower index.
        for (i, row) in embeddings.rows().into_iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (g, c) in centroids.rows().into_iter().enumerate() {
                let d = sq_dist(row, c);
                if d < best_d {
                    best_d = d;
                    best = g;
                }
            }
            assignment[i] = best;
        }
        // Re-seed empty clusters from the farthest point; each move zeroes
        // that point's SSE contribution, so the objective cannot increase.
        let mut sizes = vec![0usize; k];
        assignment.iter().for_each(|&g| sizes[g] += 1);
        for g in 0..k {
            if sizes[g] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| sizes[assignment[i]] > 1)
                .max_by(|&a, &b| {
                    let da = sq_dist(embeddings.row(a), centroids.row(assignment[a]));
                    let db = sq_dist(embeddings.row(b), centroids.row(assignment[b]));
                    da.partial_cmp(&db).expect("finite distances")
                })
                .expect("k <= n guarantees a donor cluster with >1 member");
            sizes[assignment[far]] -= 1;
            sizes[g] += 1;
            assignment[far] = g;
            centroids.row_mut(g).assign(&embeddings.row(far));
        }
        sse_history.push(
            (0..n).map(|i| sq_dist(embeddings.row(i), centroids.row(assignment[i]))).sum(),
        );
        // Update step.
        let mut new_centroids = Array2::zeros((k, embeddings.ncols()));
        for (i, &g) in assignment.iter().enumerate() {
            new_centroids.row_mut(g).scaled_add(1.0, &embeddings.row(i));
        }
        for (g, &size) in sizes.iter().enumerate() {
            new_centroids.row_mut(g).mapv_inplace(|v| v / size as f64);
        }
        let shift = centroids
            .rows()
            .into_iter()
            .zip(new_centroids.rows())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0f64, f64::max);
        centroids = new_centroids;
        if shift < KMEANS_SHIFT_TOL {
            break;
        }
    }

    // Group ids are centroid indices and every cluster is non-empty, so the
    // assignment is already compact.
    let partition = Partition::new(assignment, PartitionKind::Cluster)?;
    Ok(KmeansOutcome {
        centroids: Centroids { means: centroids },
        partition,
        sse_history,
        n_iterations,
    })
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first centroid uniform, later ones proportional to
/// squared distance from the nearest chosen centroid.
fn plus_plus_seed(
    embeddings: ArrayView2<f64>,
    k: usize,
    rng: &mut impl Rng,
) -> Array2<f64> {
    let n = embeddings.nrows();
    let mut centroids = Array2::zeros((k, embeddings.ncols()));
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).assign(&embeddings.row(first));
    let mut d2: Vec<f64> =
        (0..n).map(|i| sq_dist(embeddings.row(i), centroids.row(0))).collect();
    for g in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            WeightedIndex::new(&d2).expect("positive total weight").sample(rng)
        } else {
            // Every remaining point coincides with a centroid; any choice
            // is equivalent, take a uniform one.
            rng.gen_range(0..n)
        };
        centroids.row_mut(g).assign(&embeddings.row(pick));
        for i in 0..n {
            d2[i] = d2[i].min(sq_dist(embeddings.row(i), centroids.row(g)));
        }
    }
    centroids
}
