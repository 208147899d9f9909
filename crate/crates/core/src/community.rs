//! Greedy modularity community detection (Louvain-style).
//!
//! Communities are the pooling units of the structural contrast: each node
//! is discriminated against the mean embedding of its community. The
//! detector runs the classic two-phase scheme — local moving of nodes
//! between neighbor communities while modularity strictly improves, then
//! aggregation of communities into super-nodes — repeated until a level
//! yields no improvement. Node visit order is shuffled from a seed, and all
//! tie-breaking is by lowest community id, so results are deterministic.

use crate::cluster::{Partition, PartitionKind};
use crate::graph::Graph;
use crate::rng::component_rng;
use rand::seq::SliceRandom;
use std::collections::BTreeMap;

/// Weighted working graph for one aggregation level. Neighbor lists exclude
/// self-loops; `self_loop[i]` holds intra-node weight accumulated by
/// aggregation and counts twice toward the degree, like a graph-theoretic
/// loop.
struct WorkGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
    degree: Vec<f64>,
    /// Total degree Σ_i k_i = 2m.
    m2: f64,
}

impl WorkGraph {
    fn from_graph(g: &Graph) -> Self {
        let n = g.n_nodes();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in g.edges() {
            adj[u].push((v, 1.0));
            adj[v].push((u, 1.0));
        }
        let degree: Vec<f64> = adj.iter().map(|l| l.iter().map(|&(_, w)| w).sum()).collect();
        let m2 = degree.iter().sum();
        Self { adj, self_loop: vec![0.0; n], degree, m2 }
    }

    fn n(&self) -> usize {
        self.adj.len()
    }
}

/// One pass of local moving. Returns the node→community assignment (not
/// compacted) and whether any node moved.
fn one_level(work: &WorkGraph, order: &[usize]) -> (Vec<usize>, bool) {
    let n = work.n();
    let mut comm: Vec<usize> = (0..n).collect();
    // Total degree per community.
    let mut comm_tot: Vec<f64> = work.degree.clone();
    let mut improved = false;

    loop {
        let mut moved_this_pass = false;
        for &i in order {
            let ki = work.degree[i];
            let current = comm[i];
            // Weight from i to each neighbor community (sorted map for
            // deterministic candidate order).
            let mut w_to: BTreeMap<usize, f64> = BTreeMap::new();
            for &(j, w) in &work.adj[i] {
                *w_to.entry(comm[j]).or_insert(0.0) += w;
            }
            // Detach i, then compare candidates against staying detached.
            comm_tot[current] -= ki;
            let gain = |c: usize| -> f64 {
                w_to.get(&c).copied().unwrap_or(0.0) - comm_tot[c] * ki / work.m2
            };
            let mut best_comm = current;
            let mut best_gain = gain(current);
            for (&c, _) in &w_to {
                if c == current {
                    continue;
                }
                let g = gain(c);
                if g > best_gain {
                    best_gain = g;
                    best_comm = c;
                }
            }
            comm_tot[best_comm] += ki;
            comm[i] = best_comm;
            if best_comm != current {
                moved_this_pass = true;
                improved = true;
            }
        }
        if !moved_this_pass {
            break;
        }
    }
    (comm, improved)
}

/// Collapses each community into a super-node, summing edge weights.
fn aggregate(work: &WorkGraph, compact: &[usize], n_groups: usize) -> WorkGraph {
    let mut self_loop = vec![0.0; n_groups];
    let mut weights: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n_groups];
    for i in 0..work.n() {
        let ci = compact[i];
        self_loop[ci] += work.self_loop[i];
        for &(j, w) in &work.adj[i] {
            let cj = compact[j];
            if ci == cj {
                // Each intra-community edge is visited from both endpoints;
                // half per visit yields loop weight w overall.
                self_loop[ci] += w / 2.0;
            } else {
                *weights[ci].entry(cj).or_insert(0.0) += w;
            }
        }
    }
    let adj: Vec<Vec<(usize, f64)>> =
        weights.into_iter().map(|m| m.into_iter().collect()).collect();
    let degree: Vec<f64> = (0..n_groups)
        .map(|c| adj[c].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self_loop[c])
        .collect();
    let m2 = degree.iter().sum();
    WorkGraph { adj, self_loop, degree, m2 }
}

fn renumber(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        let next = remap.len();
        out.push(*remap.entry(l).or_insert(next));
    }
    let n_groups = remap.len();
    (out, n_groups)
}

/// Detects communities by greedy modularity maximization.
///
/// Edge-free graphs (and isolated nodes generally) yield singleton
/// communities. The partition is deterministic given the seed.
pub fn detect_communities(g: &Graph, seed: u64) -> Partition {
    let n = g.n_nodes();
    let singletons =
        || Partition::new((0..n).collect(), PartitionKind::Community).expect("identity is valid");
    let mut work = WorkGraph::from_graph(g);
    if work.m2 == 0.0 {
        return singletons();
    }
    // node -> super-node at the current level.
    let mut mapping: Vec<usize> = (0..n).collect();
    for level in 0..64 {
        let mut order: Vec<usize> = (0..work.n()).collect();
        order.shuffle(&mut component_rng(seed, "louvain-level", &[level]));
        let (comm, improved) = one_level(&work, &order);
        if !improved {
            break;
        }
        let (compact, n_groups) = renumber(&comm);
        for v in mapping.iter_mut() {
            *v = compact[*v];
        }
        if n_groups == work.n() {
            break;
        }
        work = aggregate(&work, &compact, n_groups);
    }
    Partition::from_labels(&mapping, PartitionKind::Community)
        .expect("louvain assignment covers every group")
}

/// Newman modularity of a partition on an unweighted simple graph,
/// `Q = Σ_c [ e_c/m − (d_c/2m)² ]`, zero for edge-free graphs.
pub fn modularity(g: &Graph, part: &Partition) -> f64 {
    let m = g.edges().len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let mut intra = vec![0.0f64; part.n_groups()];
    let mut deg_tot = vec![0.0f64; part.n_groups()];
    for &(u, v) in g.edges() {
        if part.group_of(u) == part.group_of(v) {
            intra[part.group_of(u)] += 1.0;
        }
    }
    for i in 0..g.n_nodes() {
        deg_tot[part.group_of(i)] += g.degree(i) as f64;
    }
    (0..part.n_groups())
        .map(|c| intra[c] / m - (deg_tot[c] / (2.0 * m)).powi(2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::adjusted_rand_index;
    use crate::rng::rng_from;
    use ndarray::Array2;
    use rand::Rng;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::build(edges, Array2::zeros((n, 1))).unwrap()
    }

    #[test]
    fn two_triangles_become_two_communities() {
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let p = detect_communities(&g, 0);
        assert_eq!(p.n_groups(), 2);
        assert_eq!(p.group_of(0), p.group_of(1));
        assert_eq!(p.group_of(0), p.group_of(2));
        assert_eq!(p.group_of(3), p.group_of(4));
        assert_ne!(p.group_of(0), p.group_of(3));
    }

    #[test]
    fn edgeless_graph_gives_singletons() {
        let g = graph(4, &[]);
        let p = detect_communities(&g, 1);
        assert_eq!(p.n_groups(), 4);
    }

    #[test]
    fn never_merges_connected_components() {
        // Components: a triangle, an edge, an isolated node.
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4)]);
        let p = detect_communities(&g, 3);
        let comps = [vec![0usize, 1, 2], vec![3, 4], vec![5]];
        for comp in &comps {
            for other in &comps {
                if comp == other {
                    continue;
                }
                for &a in comp {
                    for &b in other {
                        assert_ne!(p.group_of(a), p.group_of(b), "{a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn recovers_planted_blocks() {
        // Two 50-node blocks, dense inside (p=0.3), sparse across (p=0.01).
        let mut rng = rng_from(99);
        let mut edges = Vec::new();
        for u in 0..100usize {
            for v in (u + 1)..100 {
                let p = if (u < 50) == (v < 50) { 0.3 } else { 0.01 };
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        let g = graph(100, &edges);
        let p = detect_communities(&g, 5);
        let planted: Vec<usize> = (0..100).map(|i| usize::from(i >= 50)).collect();
        let ari = adjusted_rand_index(p.assignment(), &planted).unwrap();
        assert!(ari >= 0.9, "adjusted Rand {ari} below 0.9 ({} groups)", p.n_groups());
    }

    #[test]
    fn partition_beats_singletons_on_modularity() {
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
        let detected = detect_communities(&g, 7);
        let single = Partition::new((0..6).collect(), PartitionKind::Community).unwrap();
        assert!(modularity(&g, &detected) > modularity(&g, &single));
        // Hand value: two triangle communities joined by one bridge edge.
        // Q = 2·(3/7 − (7/14)²) = 6/7 − 1/2.
        let two_blocks =
            Partition::new(vec![0, 0, 0, 1, 1, 1], PartitionKind::Community).unwrap();
        approx::assert_abs_diff_eq!(
            modularity(&g, &two_blocks),
            6.0 / 7.0 - 0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let g = graph(8, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (6, 7), (2, 3)]);
        assert_eq!(
            detect_communities(&g, 11).assignment(),
            detect_communities(&g, 11).assignment()
        );
    }
}
