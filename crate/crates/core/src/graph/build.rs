//! Network construction: approximate neighbours from a shared signature
//! sample, then exact edge weights on per-pair evaluation sets.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lsh::{exact_knn, knn_search, LshParams};
use super::signature::{confusion, confusion_from_labels, edge_weight, lsh_signatures, sample_fingerprint, EdgeWeight};
use super::{ClassiNet, NetMeta, Vertex};
use crate::corpus::InvertedIndex;
use crate::error::{Error, Result};
use crate::predictor::BinaryPredictor;
use crate::rng::{self, StreamRng};
use crate::sparse::SparseVector;

/// Where edge weights are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// A fresh sample per pair: equal thirds containing i, containing j and
    /// containing neither, at most `cap` instances in total.
    PerPair { cap: usize },
    /// Every pool instance, for every pair.
    FullPool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub k: usize,
    pub permutations: usize,
    pub beam: usize,
    /// Rank every other vertex instead of using the permutation search.
    pub exhaustive_neighbours: bool,
    pub eval: EvalMode,
    /// Size of the shared sample the signatures are computed on.
    pub signature_size: usize,
    pub workers: usize,
    pub seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            k: 10,
            permutations: 24,
            beam: 8,
            exhaustive_neighbours: false,
            eval: EvalMode::PerPair { cap: 300 },
            signature_size: 2048,
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            seed: 0,
        }
    }
}

/// Instance ids for the evaluation set of pair (i, j): `m` containing i, `m`
/// containing j and `m` containing neither, with
/// `m = min(avail(i), avail(j), avail(neither), cap / 3)`. The thirds are
/// drawn independently, so an instance holding both features may appear in
/// the first two.
pub fn sample_eval_ids(index: &InvertedIndex, i: usize, j: usize, cap: usize, seed: u64) -> Result<Vec<usize>> {
    if i == j {
        return Err(Error::UnsampleablePair(i, j));
    }
    let (pi, pj) = (index.postings(i), index.postings(j));
    let n = index.n_instances();
    let both = intersection_size(pi, pj);
    let neither = n - (pi.len() + pj.len() - both);
    let m = pi.len().min(pj.len()).min(neither).min(cap / 3);
    if m == 0 {
        return Err(Error::UnsampleablePair(i, j));
    }
    let mut rng = rng::stream(seed, "eval-set", &[i as u64, j as u64]);
    let mut ids: Vec<usize> = index::sample(&mut rng, pi.len(), m).into_iter().map(|k| pi[k]).collect();
    ids.extend(index::sample(&mut rng, pj.len(), m).into_iter().map(|k| pj[k]));

    let outside = |d: &usize| pi.binary_search(d).is_err() && pj.binary_search(d).is_err();
    if neither >= 4 * m {
        // rejection sampling keeps this O(m) for the usual mostly-empty case
        let mut picked = std::collections::BTreeSet::new();
        let mut order = Vec::with_capacity(m);
        while order.len() < m {
            let d = rng.random_range(0..n);
            if outside(&d) && picked.insert(d) {
                order.push(d);
            }
        }
        ids.extend(order);
    } else {
        let pool: Vec<usize> = (0..n).filter(outside).collect();
        ids.extend(index::sample(&mut rng, pool.len(), m).into_iter().map(|k| pool[k]));
    }
    Ok(ids)
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut x, mut y, mut c) = (0, 0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                x += 1;
                y += 1;
            }
        }
    }
    c
}

pub fn sample_eval_set(pool: &[SparseVector], i: usize, j: usize, cap: usize, seed: u64) -> Result<Vec<SparseVector>> {
    let dim = pool.first().map(|x| x.dim()).unwrap_or(0);
    let index = InvertedIndex::new(pool, dim);
    Ok(sample_eval_ids(&index, i, j, cap, seed)?.into_iter().map(|d| pool[d].clone()).collect())
}

/// The shared sample signatures are computed on: up to half of it holds one
/// pool instance containing each vertex feature (vertices visited in seeded
/// random order), the rest is drawn uniformly from the pool.
pub fn signature_sample(index: &InvertedIndex, features: &[usize], size: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::stream(seed, "signature-sample", &[]);
    let mut order: Vec<usize> = features.to_vec();
    order.shuffle(&mut rng);
    let mut ids = Vec::with_capacity(size);
    for f in order {
        if ids.len() >= size / 2 {
            break;
        }
        let post = index.postings(f);
        if !post.is_empty() {
            ids.push(post[rng.random_range(0..post.len())]);
        }
    }
    let n = index.n_instances();
    let rest = (size - ids.len()).min(n);
    ids.extend(index::sample(&mut rng, n, rest).into_iter());
    ids
}

/// Builds the network over `predictors` (vertex v is `predictors[v]`,
/// predicting `vertices[v].feature`), measuring weights on `pool`, which
/// should not overlap the predictors' training instances.
pub fn build_classinet<P: BinaryPredictor>(
    predictors: &[P],
    vertices: Vec<Vertex>,
    pool: &[SparseVector],
    opts: &BuildOptions,
) -> Result<ClassiNet> {
    use rayon::prelude::*;

    if predictors.is_empty() {
        return Err(Error::config("cannot build a network from an empty predictor bank"));
    }
    if predictors.len() != vertices.len() {
        return Err(Error::DimensionMismatch { expected: predictors.len(), got: vertices.len() });
    }
    if pool.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if opts.k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    let dim = pool[0].dim();
    let index = InvertedIndex::new(pool, dim);
    let features: Vec<usize> = vertices.iter().map(|v| v.feature).collect();

    let sample_ids = signature_sample(&index, &features, opts.signature_size, opts.seed);
    let sample: Vec<SparseVector> = sample_ids.iter().map(|&d| pool[d].clone()).collect();
    let sigs = lsh_signatures(predictors, &sample, opts.workers)?;
    let candidates = if opts.exhaustive_neighbours {
        exact_knn(&sigs, predictors.len())?
    } else {
        let lsh = LshParams { k: opts.k, permutations: opts.permutations, beam: opts.beam, seed: opts.seed };
        knn_search(&sigs, &lsh)?
    };

    let pool_id = sample_fingerprint(pool);
    let full_labels = match opts.eval {
        EvalMode::FullPool => Some(lsh_signatures(predictors, pool, opts.workers)?),
        EvalMode::PerPair { .. } => None,
    };

    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    let per_vertex: Vec<Vec<(usize, usize, f64)>> = threads.install(|| {
        candidates
            .par_iter()
            .enumerate()
            .map(|(i, cands)| {
                let mut out = Vec::new();
                for &(j, _) in cands {
                    let w = match (&full_labels, opts.eval) {
                        (Some(labels), _) => {
                            confusion(&labels[i], &labels[j]).map(|c| edge_weight(&c))
                        }
                        (None, EvalMode::PerPair { cap }) => {
                            sample_eval_ids(&index, features[i], features[j], cap, opts.seed).map(|ids| {
                                let li: Vec<bool> = ids.iter().map(|&d| predictors[i].fires(&pool[d])).collect();
                                let lj: Vec<bool> = ids.iter().map(|&d| predictors[j].fires(&pool[d])).collect();
                                edge_weight(&confusion_from_labels(&li, &lj))
                            })
                        }
                        (None, EvalMode::FullPool) => unreachable!("labels computed above"),
                    };
                    match w {
                        Ok(w) if !w.degenerate && w.value > 0.0 => out.push((i, j, w.value)),
                        Ok(_) => {}
                        Err(Error::UnsampleablePair(a, b)) => {
                            log::debug!("dropping edge {i}->{j}: features {a} and {b} cannot be sampled");
                        }
                        Err(e) => return Err(e),
                    }
                }
                out.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.1.cmp(&b.1)));
                out.truncate(opts.k);
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let d_prime = match opts.eval {
        EvalMode::PerPair { cap } => 3 * (cap / 3),
        EvalMode::FullPool => pool.len(),
    };
    let meta = NetMeta { k: opts.k, d_prime, seed: opts.seed, fingerprint: pool_id, notes: Vec::new() };
    ClassiNet::new(vertices, per_vertex.into_iter().flatten().collect(), meta)
}

/// Monte-Carlo estimate of the edge weight as a ratio of expectations: the
/// chance both predictors fire over the chance the first does, each estimated
/// from `rounds` instances drawn by `sampler`. Slow; meant as a check on the
/// exact counts.
pub fn estimate_edge_weight_sampled<P, Q, F>(mut sampler: F, hi: &P, hj: &Q, rounds: usize, seed: u64) -> Result<EdgeWeight>
where
    P: BinaryPredictor + ?Sized,
    Q: BinaryPredictor + ?Sized,
    F: FnMut(&mut StreamRng) -> SparseVector,
{
    if rounds == 0 {
        return Err(Error::config("rounds must be at least 1"));
    }
    let mut rng = rng::stream(seed, "edge-weight-sampled", &[]);
    let (mut both, mut first) = (0u64, 0u64);
    for _ in 0..rounds {
        let x = sampler(&mut rng);
        if hi.fires(&x) {
            first += 1;
            if hj.fires(&x) {
                both += 1;
            }
        }
    }
    Ok(edge_weight(&super::ConfusionCounts { m11: both, m10: first - both, m01: 0, m00: 0 }))
}
