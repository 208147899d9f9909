//! Node-attributed undirected graph and its derived artifacts.
//!
//! A [`Graph`] couples a deduplicated, self-loop-free edge list with a dense
//! node-feature matrix. From it the training stack derives the symmetric
//! renormalized adjacency `Â = D̃^{-1/2}(A + I)D̃^{-1/2}` used by both
//! convolution layers, and row-shuffled feature corruptions for the
//! structural contrast. Both the graph and the normalized adjacency are
//! immutable after construction and cheap to share.

use crate::rng::rng_from;
use crate::sparse::CsrMatrix;
use crate::{error::CoreError, Result};
use ndarray::Array2;
use rand::seq::SliceRandom;
use std::sync::Arc;

/// Immutable undirected graph with dense node features.
#[derive(Debug, Clone)]
pub struct Graph {
    edges: Vec<(usize, usize)>,
    features: Array2<f64>,
    /// Sorted neighbor lists, one per node.
    neighbors: Vec<Vec<usize>>,
    /// Optional external identifiers, parallel to node indices.
    node_ids: Option<Vec<String>>,
}

impl Graph {
    /// Builds a graph from an edge list and an `N×d` feature matrix.
    ///
    /// The node count is the feature row count. Input edges may appear in
    /// either orientation and any multiplicity; self-loops are dropped and
    /// duplicates collapsed. Endpoints must lie in `0..N`.
    pub fn build(edge_list: &[(usize, usize)], features: Array2<f64>) -> Result<Self> {
        let n = features.nrows();
        if n == 0 {
            return Err(CoreError::EmptyGraph);
        }
        let mut edges = Vec::with_capacity(edge_list.len());
        for &(u, v) in edge_list {
            let bad = if u >= n { Some(u) } else if v >= n { Some(v) } else { None };
            if let Some(bad) = bad {
                return Err(CoreError::EndpointOutOfRange { u, v, bad, n_nodes: n });
            }
            if u == v {
                continue;
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        edges.dedup();

        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self { edges, features, neighbors, node_ids: None })
    }

    /// Attaches external node identifiers (one per node).
    pub fn with_node_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n_nodes() {
            return Err(CoreError::DimensionMismatch {
                context: "node identifier list",
                expected: self.n_nodes(),
                actual: ids.len(),
            });
        }
        self.node_ids = Some(ids);
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.features.nrows()
    }

    /// Feature dimensionality `d`.
    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    /// Deduplicated undirected edges with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn node_ids(&self) -> Option<&[String]> {
        self.node_ids.as_deref()
    }

    /// Sorted neighbors of node `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    /// Returns the feature matrix with rows permuted by a uniformly random
    /// permutation drawn from `seed`. The multiset of rows is preserved;
    /// repeated calls with the same seed return the same matrix.
    pub fn corrupt_features(&self, seed: u64) -> Result<Array2<f64>> {
        let n = self.n_nodes();
        if n < 2 {
            return Err(CoreError::InvalidParameter {
                name: "n_nodes",
                message: format!("feature shuffling needs at least 2 nodes, got {n}"),
            });
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng_from(seed));
        let mut out = Array2::zeros(self.features.raw_dim());
        for (dst, &src) in perm.iter().enumerate() {
            out.row_mut(dst).assign(&self.features.row(src));
        }
        Ok(out)
    }
}

/// Symmetric renormalized adjacency `Â = D̃^{-1/2}(A + I)D̃^{-1/2}`,
/// where `D̃` is the degree matrix of `A + I`.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    matrix: Arc<CsrMatrix>,
    /// Always true for this construction; recorded for checkpoint metadata.
    pub self_loops_added: bool,
}

impl NormalizedAdjacency {
    /// Shared handle to the underlying sparse matrix.
    pub fn matrix(&self) -> &Arc<CsrMatrix> {
        &self.matrix
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Computes the symmetric renormalized adjacency of `g`.
///
/// Isolated nodes keep a pure self-loop row (`Â[i,i] = 1`), so propagation
/// is well defined for every node.
pub fn normalize_adjacency(g: &Graph) -> NormalizedAdjacency {
    let n = g.n_nodes();
    let mut inv_sqrt_deg = Vec::with_capacity(n);
    for i in 0..n {
        inv_sqrt_deg.push(1.0 / ((g.degree(i) + 1) as f64).sqrt());
    }
    let mut triplets = Vec::with_capacity(2 * g.edges().len() + n);
    for i in 0..n {
        triplets.push((i, i, inv_sqrt_deg[i] * inv_sqrt_deg[i]));
    }
    for &(u, v) in g.edges() {
        let w = inv_sqrt_deg[u] * inv_sqrt_deg[v];
        triplets.push((u, v, w));
        triplets.push((v, u, w));
    }
    let matrix = CsrMatrix::from_triplets(n, n, triplets)
        .expect("adjacency triplets are in range by construction");
    NormalizedAdjacency { matrix: Arc::new(matrix), self_loops_added: true }
}
