//! Expansion methods that look only at predictors or at immediate graph
//! structure around an instance's features.

use std::collections::{BTreeSet, VecDeque};

use super::{ExpansionCandidate, Method};
use crate::graph::ClassiNet;
use crate::logistic::sigmoid;
use crate::predictor::PredictorBank;
use crate::sparse::SparseVector;

/// Predictor weights transposed into per-feature columns so all predictors
/// can be scored against one instance in time proportional to the instance's
/// non-zeros.
#[derive(Debug, Clone)]
pub struct BankScorer {
    dim: usize,
    columns: Vec<Vec<(u32, f64)>>,
    biases: Vec<f64>,
    targets: Vec<usize>,
}

impl BankScorer {
    pub fn new(bank: &PredictorBank) -> Self {
        let mut columns = vec![Vec::new(); bank.dim()];
        for (v, p) in bank.predictors().iter().enumerate() {
            for (i, w) in p.weights().iter() {
                columns[i].push((v as u32, w));
            }
        }
        Self {
            dim: bank.dim(),
            columns,
            biases: bank.predictors().iter().map(|p| p.bias()).collect(),
            targets: bank.features(),
        }
    }

    pub fn len(&self) -> usize {
        self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biases.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Target feature of each vertex.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// μᵥᵀx + bᵥ for every vertex v.
    pub fn margins(&self, x: &SparseVector) -> Vec<f64> {
        let mut m = self.biases.clone();
        for (i, xi) in x.iter() {
            if let Some(col) = self.columns.get(i) {
                for &(v, w) in col {
                    m[v as usize] += w * xi;
                }
            }
        }
        m
    }

    /// Vertices whose predictor fires on `x`, with their firing probability.
    pub fn firing(&self, x: &SparseVector) -> Vec<(usize, f64)> {
        self.margins(x)
            .into_iter()
            .enumerate()
            .map(|(v, m)| (v, sigmoid(m)))
            .filter(|&(_, s)| s > 0.5)
            .collect()
    }
}

/// Every firing predictor becomes a candidate scored 1 (or its firing
/// probability when `posterior` is set).
pub fn independent_candidates(scorer: &BankScorer, x: &SparseVector, posterior: bool) -> Vec<ExpansionCandidate> {
    scorer
        .firing(x)
        .into_iter()
        .map(|(v, s)| ExpansionCandidate {
            vertex: v,
            feature: scorer.targets[v],
            score: if posterior { s } else { 1.0 },
            method: Method::Independent,
        })
        .collect()
}

const UNREACHED: u8 = u8::MAX;

fn bfs(net: &ClassiNet, start: usize, max_hops: usize, reverse: Option<&[Vec<usize>]>) -> Vec<u8> {
    let mut dist = vec![UNREACHED; net.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u] as usize;
        if d == max_hops {
            continue;
        }
        let mut visit = |v: usize| {
            if dist[v] == UNREACHED {
                dist[v] = (d + 1) as u8;
                queue.push_back(v);
            }
        };
        match reverse {
            Some(rev) => rev[u].iter().for_each(|&v| visit(v)),
            None => net.out_edges(u).iter().filter(|e| e.weight > 0.0).for_each(|e| visit(e.target)),
        }
    }
    dist
}

/// In-neighbour lists of every vertex over positive-weight edges.
pub fn reverse_adjacency(net: &ClassiNet) -> Vec<Vec<usize>> {
    let mut rev = vec![Vec::new(); net.len()];
    for (s, t, w) in net.edges() {
        if w > 0.0 {
            rev[t].push(s);
        }
    }
    rev
}

/// Vertices lying on some hop-count-shortest directed path of at most
/// `max_hops` edges from a vertex in `sources` to a vertex in `targets`,
/// endpoints included.
pub fn shortest_path_vertices(
    net: &ClassiNet,
    rev: &[Vec<usize>],
    sources: &[usize],
    targets: &[usize],
    max_hops: usize,
) -> BTreeSet<usize> {
    assert!(max_hops < UNREACHED as usize, "hop cap too large");
    let to_target: Vec<(usize, Vec<u8>)> = targets.iter().map(|&t| (t, bfs(net, t, max_hops, Some(rev)))).collect();
    let mut on_path = BTreeSet::new();
    for &s in sources {
        let from = bfs(net, s, max_hops, None);
        let ball: Vec<usize> = (0..net.len()).filter(|&v| from[v] != UNREACHED).collect();
        for (t, back) in &to_target {
            if *t == s || from[*t] == UNREACHED {
                continue;
            }
            let len = from[*t];
            for &v in &ball {
                if back[v] != UNREACHED && from[v] as u16 + back[v] as u16 == len as u16 {
                    on_path.insert(v);
                }
            }
        }
    }
    on_path
}

/// Independent candidates plus every vertex on a shortest path from one of
/// the instance's own vertices to a predicted vertex. Path vertices already
/// present in the instance are not added again.
pub fn local_path_candidates(
    net: &ClassiNet,
    rev: &[Vec<usize>],
    scorer: &BankScorer,
    x: &SparseVector,
    max_hops: usize,
    posterior: bool,
) -> Vec<ExpansionCandidate> {
    let mut out = independent_candidates(scorer, x, posterior);
    for c in &mut out {
        c.method = Method::LocalPath;
    }
    let sources: Vec<usize> = x.indices().filter_map(|f| net.vertex_of_feature(f)).collect();
    let predicted: Vec<usize> = out.iter().map(|c| c.vertex).collect();
    let taken: BTreeSet<usize> = predicted.iter().copied().collect();
    for v in shortest_path_vertices(net, rev, &sources, &predicted, max_hops) {
        let feature = net.vertex(v).feature;
        if !taken.contains(&v) && !x.contains(feature) {
            out.push(ExpansionCandidate { vertex: v, feature, score: 1.0, method: Method::LocalPath });
        }
    }
    out.sort_by_key(|c| c.vertex);
    out
}

/// Undirected graph keeping edge {i, j} only when each endpoint is among the
/// other's top-k out-neighbours by weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MutualKnnGraph {
    pub k: usize,
    pub source_fingerprint: u64,
    adjacency: Vec<Vec<usize>>,
}

impl MutualKnnGraph {
    pub fn build(net: &ClassiNet, k: usize) -> Self {
        assert!(k >= 1, "k must be at least 1");
        let top: Vec<Vec<usize>> = (0..net.len())
            .map(|v| net.out_edges(v).iter().take(k).map(|e| e.target).collect())
            .collect();
        let adjacency = (0..net.len())
            .map(|i| {
                let mut adj: Vec<usize> = top[i].iter().copied().filter(|&j| top[j].contains(&i)).collect();
                adj.sort_unstable();
                adj
            })
            .collect();
        Self { k, source_fingerprint: net.meta().fingerprint, adjacency }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.iter().filter(move |&&j| i < j).map(move |&j| (i, j)))
    }
}

fn neighbour_counts(net: &ClassiNet, g: &MutualKnnGraph, x: &SparseVector) -> Vec<(usize, usize)> {
    let mut counts = std::collections::BTreeMap::new();
    for v in x.indices().filter_map(|f| net.vertex_of_feature(f)) {
        for &u in g.neighbours(v) {
            *counts.entry(u).or_insert(0usize) += 1;
        }
    }
    counts
        .into_iter()
        .filter(|&(u, _)| !x.contains(net.vertex(u).feature))
        .collect()
}

/// Graph neighbours of any of the instance's vertices.
pub fn all_neighbour_candidates(net: &ClassiNet, g: &MutualKnnGraph, x: &SparseVector) -> Vec<ExpansionCandidate> {
    neighbour_counts(net, g, x)
        .into_iter()
        .map(|(u, _)| ExpansionCandidate { vertex: u, feature: net.vertex(u).feature, score: 1.0, method: Method::AllNeighbours })
        .collect()
}

/// Graph neighbours shared by at least two distinct vertices of the instance.
pub fn mutual_neighbour_candidates(net: &ClassiNet, g: &MutualKnnGraph, x: &SparseVector) -> Vec<ExpansionCandidate> {
    neighbour_counts(net, g, x)
        .into_iter()
        .filter(|&(_, c)| c >= 2)
        .map(|(u, _)| ExpansionCandidate {
            vertex: u,
            feature: net.vertex(u).feature,
            score: 1.0,
            method: Method::MutualNeighbours,
        })
        .collect()
}
