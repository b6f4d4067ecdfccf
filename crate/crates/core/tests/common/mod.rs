//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use classinet::graph::{ClassiNet, NetMeta, Vertex};
use classinet::rng;
use classinet::SparseVector;
use rand::seq::index;
use rand::Rng;

pub fn vertices(n: usize) -> Vec<Vertex> {
    (0..n).map(|i| Vertex { feature: i, term: format!("w{i}") }).collect()
}

/// Random directed net on `n` vertices with edge probability `p` and weights
/// in (0, 1]. With `acyclic`, edges only go from lower to higher ids.
pub fn random_net(n: usize, p: f64, acyclic: bool, seed: u64) -> ClassiNet {
    let mut rng = rng::stream(seed, "test-net", &[]);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || (acyclic && j < i) {
                continue;
            }
            if rng.random::<f64>() < p {
                edges.push((i, j, rng.random_range(0.05..=1.0)));
            }
        }
    }
    ClassiNet::new(vertices(n), edges, NetMeta::default()).unwrap()
}

/// Random net with weights that are multiples of 1/8, so sums of products
/// along short paths are exact in binary floating point.
pub fn dyadic_net(n: usize, p: f64, seed: u64) -> ClassiNet {
    let mut rng = rng::stream(seed, "dyadic-net", &[]);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < p {
                edges.push((i, j, rng.random_range(1..=8) as f64 / 8.0));
            }
        }
    }
    ClassiNet::new(vertices(n), edges, NetMeta::default()).unwrap()
}

/// Binary instance over `dim` features with `nnz` distinct random features.
pub fn random_instance(dim: usize, nnz: usize, rng: &mut impl Rng) -> SparseVector {
    let idx = index::sample(rng, dim, nnz.min(dim));
    SparseVector::from_pairs(dim, idx.into_iter().map(|i| (i, 1.0)).collect()).unwrap()
}

/// Corpus of binary instances where feature f appears with probability
/// decreasing in f, plus a few correlated pairs so edges vary.
pub fn toy_corpus(docs: usize, vocab: usize, seed: u64) -> Vec<SparseVector> {
    let mut rng = rng::stream(seed, "toy-corpus", &[]);
    (0..docs)
        .map(|_| {
            let mut pairs = Vec::new();
            for f in 0..vocab {
                let p = 0.4 / (1.0 + f as f64 * 0.15);
                if rng.random::<f64>() < p {
                    pairs.push((f, 1.0));
                    if f + 1 < vocab && rng.random::<f64>() < 0.5 {
                        pairs.push((f + 1, 1.0));
                    }
                }
            }
            SparseVector::from_pairs(vocab, pairs).unwrap()
        })
        .collect()
}

/// Every directed path from `s` with 1..=`max_len` edges, as vertex lists.
/// Only meaningful on acyclic nets.
pub fn enumerate_paths(net: &ClassiNet, s: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![vec![s]];
    while let Some(path) = stack.pop() {
        if path.len() > 1 {
            out.push(path.clone());
        }
        if path.len() - 1 == max_len {
            continue;
        }
        for e in net.out_edges(*path.last().unwrap()) {
            let mut next = path.clone();
            next.push(e.target);
            stack.push(next);
        }
    }
    out
}

/// Dense matrix power-series oracle in plain loops: Σ_{h=1..q} γ^h (Wᵀ)^h x.
pub fn dense_series(net: &ClassiNet, x0: &[f64], gamma: f64, q: usize) -> Vec<f64> {
    let w = net.dense_weights();
    let n = net.len();
    let mut cur = x0.to_vec();
    let mut acc = vec![0.0; n];
    for _ in 0..q {
        let mut next = vec![0.0; n];
        for t in 0..n {
            for s in 0..n {
                next[t] += w[s][t] * cur[s];
            }
        }
        for t in 0..n {
            next[t] *= gamma;
            acc[t] += next[t];
        }
        cur = next;
    }
    acc
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn gaussian_vec(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect()
}

/// Label vectors of `n` random hyperplanes through the origin of ℝ^`dim`
/// over `len` gaussian points: neighbours in hamming space are hyperplanes
/// at small angles.
pub fn hyperplane_signatures(n: usize, dim: usize, len: usize, seed: u64) -> Vec<classinet::graph::LabelVector> {
    let mut rng = rng::stream(seed, "hyperplanes", &[]);
    let points: Vec<Vec<f64>> = (0..len).map(|_| gaussian_vec(dim, &mut rng)).collect();
    (0..n)
        .map(|v| {
            let mu = gaussian_vec(dim, &mut rng);
            let bits: Vec<bool> = points.iter().map(|p| p.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>() > 0.0).collect();
            classinet::graph::LabelVector::from_bools(v, 0, &bits)
        })
        .collect()
}

/// Plain dense re-statement of the regularized logistic loss.
pub fn oracle_loss(xs: &[Vec<f64>], ys: &[bool], w: &[f64], b: f64, lambda: f64) -> f64 {
    let mut total = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let m: f64 = x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
        let s = if y { 1.0 } else { -1.0 };
        total += (1.0 + (-s * m).exp()).ln();
    }
    total / xs.len() as f64 + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}
