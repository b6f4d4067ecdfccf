//! Approximate hamming k-NN over label vectors by sorting randomly permuted
//! bit strings: vertices that sort next to each other under some permutation
//! share long prefixes and are likely close.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::signature::LabelVector;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LshParams {
    pub k: usize,
    pub permutations: usize,
    /// Neighbours taken on each side of a vertex in every sorted order.
    pub beam: usize,
    pub seed: u64,
}

impl Default for LshParams {
    fn default() -> Self {
        Self { k: 10, permutations: 24, beam: 8, seed: 0 }
    }
}

/// A neighbour and its hamming distance.
pub type Neighbour = (usize, usize);

fn check_lengths(sigs: &[LabelVector]) -> Result<usize> {
    let len = sigs.first().map(|s| s.len()).unwrap_or(0);
    if let Some(bad) = sigs.iter().find(|s| s.len() != len) {
        return Err(Error::DimensionMismatch { expected: len, got: bad.len() });
    }
    Ok(len)
}

fn rank(mut cands: Vec<Neighbour>, k: usize) -> Vec<Neighbour> {
    cands.sort_unstable_by_key(|&(v, d)| (d, v));
    cands.truncate(k);
    cands
}

/// Brute-force k nearest neighbours of every vertex (self excluded), nearest
/// first, ties broken by ascending vertex id.
pub fn exact_knn(sigs: &[LabelVector], k: usize) -> Result<Vec<Vec<Neighbour>>> {
    check_lengths(sigs)?;
    Ok((0..sigs.len())
        .map(|i| {
            let cands = (0..sigs.len()).filter(|&j| j != i).map(|j| (j, sigs[i].hamming(&sigs[j]))).collect();
            rank(cands, k)
        })
        .collect())
}

fn permuted(sig: &LabelVector, perm: &[usize]) -> Vec<u64> {
    let mut out = vec![0u64; perm.len().div_ceil(64)];
    for (pos, &src) in perm.iter().enumerate() {
        if sig.get(src) {
            out[pos / 64] |= 1 << (63 - pos % 64);
        }
    }
    out
}

/// Candidate neighbours from `permutations` sorted orders, re-ranked by exact
/// hamming distance. Returns at most `k` neighbours per vertex.
pub fn knn_search(sigs: &[LabelVector], params: &LshParams) -> Result<Vec<Vec<Neighbour>>> {
    if params.k == 0 || params.permutations == 0 {
        return Err(Error::config("k and the permutation count must be at least 1"));
    }
    let len = check_lengths(sigs)?;
    let n = sigs.len();
    let mut candidates: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut perm: Vec<usize> = (0..len).collect();
    for p in 0..params.permutations {
        perm.sort_unstable();
        perm.shuffle(&mut rng::stream(params.seed, "lsh-permutation", &[p as u64]));
        let keys: Vec<Vec<u64>> = sigs.iter().map(|s| permuted(s, &perm)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
        for (pos, &v) in order.iter().enumerate() {
            let lo = pos.saturating_sub(params.beam);
            let hi = (pos + params.beam + 1).min(n);
            candidates[v].extend(order[lo..hi].iter().filter(|&&u| u != v));
        }
    }
    Ok(candidates
        .into_iter()
        .enumerate()
        .map(|(v, mut cands)| {
            cands.sort_unstable();
            cands.dedup();
            let scored = cands.into_iter().map(|u| (u, sigs[v].hamming(&sigs[u]))).collect();
            rank(scored, params.k)
        })
        .collect())
}

/// Fraction of the exact neighbour ids that the approximate lists recover,
/// averaged over vertices.
pub fn mean_recall(approx: &[Vec<Neighbour>], exact: &[Vec<Neighbour>]) -> f64 {
    if exact.is_empty() {
        return 1.0;
    }
    let total: f64 = approx
        .iter()
        .zip(exact)
        .map(|(a, e)| {
            if e.is_empty() {
                return 1.0;
            }
            let hits = e.iter().filter(|(u, _)| a.iter().any(|(w, _)| w == u)).count();
            hits as f64 / e.len() as f64
        })
        .sum();
    total / exact.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub alpha: usize,
    pub vertices: Vec<usize>,
    pub ks: Vec<usize>,
    /// Mean overlap between approximate and exhaustive neighbourhoods, one
    /// entry per k.
    pub overlap: Vec<f64>,
}

/// Samples `alpha` vertices and compares their exhaustive neighbourhoods
/// (ranked by disagreement count against every other vertex) with the
/// approximate ones, for every candidate k.
pub fn calibrate_k(sigs: &[LabelVector], alpha: usize, ks: &[usize], params: &LshParams) -> Result<CalibrationReport> {
    if alpha == 0 {
        return Err(Error::NonPositiveAlpha);
    }
    if alpha > sigs.len() {
        return Err(Error::config(format!("alpha {alpha} exceeds vertex count {}", sigs.len())));
    }
    let mut vertices: Vec<usize> = (0..sigs.len()).collect();
    vertices.shuffle(&mut rng::stream(params.seed, "calibrate-k", &[]));
    vertices.truncate(alpha);
    vertices.sort_unstable();

    let mut overlap = Vec::with_capacity(ks.len());
    for &k in ks {
        let approx = knn_search(sigs, &LshParams { k, ..*params })?;
        let exact: Vec<Vec<Neighbour>> = vertices
            .iter()
            .map(|&i| {
                let all = (0..sigs.len()).filter(|&j| j != i).map(|j| (j, sigs[i].hamming(&sigs[j]))).collect();
                rank(all, k)
            })
            .collect();
        let picked: Vec<Vec<Neighbour>> = vertices.iter().map(|&i| approx[i].clone()).collect();
        overlap.push(mean_recall(&picked, &exact));
    }
    Ok(CalibrationReport { alpha, vertices, ks: ks.to_vec(), overlap })
}
