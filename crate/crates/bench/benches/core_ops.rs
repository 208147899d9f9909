//! Hot-path timings on the desk-scale benchmark: encoder forward pass, the
//! full objective with backpropagation, K-means, community detection, and
//! the ρ reliability weights.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use wsnet_bench::{benchmark_graph, benchmark_lfs};
use wsnet_core::autodiff::Tape;
use wsnet_core::cluster::kmeans;
use wsnet_core::community::detect_communities;
use wsnet_core::graph::normalize_adjacency;
use wsnet_core::losses::{
    build_contrast_batch, compute_rho, scon_loss, total_loss, wlce_loss, wlcon_loss,
    RhoSettings,
};
use wsnet_core::nn::{classify, encode, EncoderParams, ModelDims};
use wsnet_core::weak::majority_vote;

fn encoder_dims(n_features: usize) -> ModelDims {
    ModelDims { n_features, hidden1: 64, embedding: 32, n_classes: 3 }
}

fn bench_encode_forward(c: &mut Criterion) {
    let (g, _) = benchmark_graph();
    let adj = normalize_adjacency(&g);
    let params = EncoderParams::init(encoder_dims(g.feature_dim()), 1).unwrap();
    c.bench_function("encode_forward_300", |b| {
        b.iter(|| {
            let mut tape = Tape::new();
            let bound = params.bind(&mut tape).unwrap();
            let x = tape.constant(g.features().to_owned()).unwrap();
            let h = encode(&mut tape, &adj, x, &bound).unwrap();
            black_box(tape.value(h).sum())
        })
    });
}

fn bench_full_objective_backward(c: &mut Criterion) {
    let (g, y) = benchmark_graph();
    let wlm = benchmark_lfs(&y);
    let adj = normalize_adjacency(&g);
    let params = EncoderParams::init(encoder_dims(g.feature_dim()), 1).unwrap();
    let agg = majority_vote(&wlm);
    let weights = vec![1.0; g.n_nodes()];
    let communities = detect_communities(&g, 2);
    let anchors: Vec<usize> = (0..g.n_nodes()).filter(|&i| wlm.is_covered(i)).collect();
    let batch = build_contrast_batch(&wlm, &g, &anchors, 50, 5.0, true, 3).unwrap();
    let corrupted = g.corrupt_features(4).unwrap();
    c.bench_function("objective_forward_backward_300", |b| {
        b.iter(|| {
            let mut tape = Tape::new();
            let bound = params.bind(&mut tape).unwrap();
            let x = tape.constant(g.features().to_owned()).unwrap();
            let h = encode(&mut tape, &adj, x, &bound).unwrap();
            let yhat = classify(&mut tape, h, &bound).unwrap();
            let (l_wlce, _) =
                wlce_loss(&mut tape, yhat, &agg, &weights, g.n_nodes()).unwrap();
            let l_wlcon = wlcon_loss(&mut tape, h, &batch).unwrap();
            let xc = tape.constant(corrupted.clone()).unwrap();
            let hc = encode(&mut tape, &adj, xc, &bound).unwrap();
            let l_scon = scon_loss(&mut tape, h, hc, &communities).unwrap();
            let (total, _) =
                total_loss(&mut tape, Some(l_scon), Some(l_wlce), Some(l_wlcon)).unwrap();
            tape.backward(total).unwrap();
            black_box(params.gradients(&tape, &bound))
        })
    });
}

fn bench_kmeans(c: &mut Criterion) {
    let (g, y) = benchmark_graph();
    let wlm = benchmark_lfs(&y);
    let adj = normalize_adjacency(&g);
    let params = EncoderParams::init(encoder_dims(g.feature_dim()), 1).unwrap();
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape).unwrap();
    let x = tape.constant(g.features().to_owned()).unwrap();
    let h = encode(&mut tape, &adj, x, &bound).unwrap();
    let embeddings = tape.value(h).to_owned();
    c.bench_function("kmeans_300x32_k3", |b| {
        b.iter(|| black_box(kmeans(embeddings.view(), 3, 9).unwrap()))
    });
    let clusters = kmeans(embeddings.view(), 3, 9).unwrap().partition;
    c.bench_function("rho_weights_300", |b| {
        b.iter(|| {
            black_box(
                compute_rho(embeddings.view(), &clusters, &wlm, &RhoSettings::default())
                    .unwrap(),
            )
        })
    });
}

fn bench_community_detection(c: &mut Criterion) {
    let (g, _) = benchmark_graph();
    c.bench_function("louvain_communities_300", |b| {
        b.iter(|| black_box(detect_communities(&g, 2)))
    });
}

criterion_group!(
    benches,
    bench_encode_forward,
    bench_full_objective_backward,
    bench_kmeans,
    bench_community_detection
);
criterion_main!(benches);
