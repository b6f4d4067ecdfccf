//! The predictor network: a directed graph whose edge i→j carries the
//! probability that predictor j fires given that predictor i fires.

mod build;
mod lsh;
mod signature;

pub use build::{
    build_classinet, estimate_edge_weight_sampled, sample_eval_ids, sample_eval_set, signature_sample, BuildOptions,
    EvalMode,
};
pub use lsh::{calibrate_k, exact_knn, knn_search, mean_recall, CalibrationReport, LshParams, Neighbour};
pub use signature::{
    confusion, confusion_from_labels, edge_weight, estimate_angle, label_vector, lsh_signatures, sample_fingerprint,
    ConfusionCounts, EdgeWeight, LabelVector,
};

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corpus::parse_num;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    /// Index of the feature this vertex predicts.
    pub feature: usize,
    pub term: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetMeta {
    pub k: usize,
    /// Evaluation-set size bound used for edge weights.
    pub d_prime: usize,
    pub seed: u64,
    /// Fingerprint of the instances the edge weights were measured on.
    pub fingerprint: u64,
    /// Free-form lines carried in the file header (run configuration).
    pub notes: Vec<String>,
}

/// Immutable once built. Adjacency lists are sorted by descending weight,
/// then ascending target.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassiNet {
    vertices: Vec<Vertex>,
    adjacency: Vec<Vec<Edge>>,
    meta: NetMeta,
    by_feature: HashMap<usize, usize>,
    by_term: HashMap<String, usize>,
}

impl ClassiNet {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<(usize, usize, f64)>, meta: NetMeta) -> Result<Self> {
        let n = vertices.len();
        let mut adjacency: Vec<Vec<Edge>> = vec![Vec::new(); n];
        for (src, dst, weight) in edges {
            if src >= n || dst >= n {
                return Err(Error::format("graph", format!("edge {src}->{dst} outside {n} vertices")));
            }
            if src == dst {
                return Err(Error::format("graph", format!("self-loop on {src}")));
            }
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::format("graph", format!("weight {weight} on {src}->{dst} outside [0,1]")));
            }
            adjacency[src].push(Edge { target: dst, weight });
        }
        for (src, adj) in adjacency.iter_mut().enumerate() {
            adj.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.target.cmp(&b.target)));
            if adj.iter().map(|e| e.target).collect::<std::collections::HashSet<_>>().len() != adj.len() {
                return Err(Error::format("graph", format!("duplicate edge from {src}")));
            }
            if meta.k > 0 && adj.len() > meta.k {
                return Err(Error::format("graph", format!("vertex {src} has out-degree {} > k={}", adj.len(), meta.k)));
            }
        }
        let mut by_feature = HashMap::with_capacity(n);
        let mut by_term = HashMap::with_capacity(n);
        for (v, vx) in vertices.iter().enumerate() {
            if by_feature.insert(vx.feature, v).is_some() {
                return Err(Error::format("graph", format!("feature {} appears twice", vx.feature)));
            }
            by_term.insert(vx.term.clone(), v);
        }
        Ok(Self { vertices, adjacency, meta, by_feature, by_term })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &Vertex {
        &self.vertices[v]
    }

    pub fn meta(&self) -> &NetMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut NetMeta {
        &mut self.meta
    }

    pub fn out_edges(&self, v: usize) -> &[Edge] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// All edges as (source, target, weight) in source order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(s, adj)| adj.iter().map(move |e| (s, e.target, e.weight)))
    }

    /// Weight of i→j, zero when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i].iter().find(|e| e.target == j).map_or(0.0, |e| e.weight)
    }

    pub fn vertex_of_feature(&self, feature: usize) -> Option<usize> {
        self.by_feature.get(&feature).copied()
    }

    pub fn vertex_of_term(&self, term: &str) -> Option<usize> {
        self.by_term.get(term).copied()
    }

    /// Row-major dense weight matrix, W[i][j] = weight of i→j.
    pub fn dense_weights(&self) -> Vec<Vec<f64>> {
        let mut w = vec![vec![0.0; self.len()]; self.len()];
        for (s, t, x) in self.edges() {
            w[s][t] = x;
        }
        w
    }

    pub fn write(&self, mut out: impl Write) -> Result<()> {
        let m = &self.meta;
        writeln!(
            out,
            "classinet-graph v1 {} {} {} {} {}",
            self.len(),
            self.edge_count(),
            m.k,
            m.d_prime,
            m.seed
        )?;
        writeln!(out, "# fingerprint {:016x}", m.fingerprint)?;
        for note in &m.notes {
            if note.contains('\n') {
                return Err(Error::format("graph", "header note spans lines"));
            }
            writeln!(out, "# {note}")?;
        }
        for v in &self.vertices {
            if v.term.contains(['\t', '\n']) {
                return Err(Error::format("graph", format!("term {:?} contains a separator", v.term)));
            }
            writeln!(out, "{}\t{}", v.feature, v.term)?;
        }
        for (s, t, w) in self.edges() {
            writeln!(out, "{s}\t{t}\t{w:.16e}")?;
        }
        Ok(())
    }

    pub fn read(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::format("graph", "empty file"))??;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 7 || f[0] != "classinet-graph" || f[1] != "v1" {
            return Err(Error::format("graph", format!("bad header {header:?}")));
        }
        let n_vertices: usize = parse_num(f[2], "graph")?;
        let n_edges: usize = parse_num(f[3], "graph")?;
        let mut meta = NetMeta {
            k: parse_num(f[4], "graph")?,
            d_prime: parse_num(f[5], "graph")?,
            seed: parse_num(f[6], "graph")?,
            ..Default::default()
        };

        let mut vertices = Vec::with_capacity(n_vertices);
        let mut edges = Vec::with_capacity(n_edges);
        for line in lines {
            let line = line?;
            if let Some(note) = line.strip_prefix('#') {
                if !vertices.is_empty() {
                    return Err(Error::format("graph", "comment after the header block"));
                }
                let note = note.strip_prefix(' ').unwrap_or(note);
                match note.strip_prefix("fingerprint ") {
                    Some(hex) => {
                        meta.fingerprint = u64::from_str_radix(hex.trim(), 16)
                            .map_err(|_| Error::format("graph", format!("bad fingerprint {hex:?}")))?
                    }
                    None => meta.notes.push(note.to_string()),
                }
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if vertices.len() < n_vertices {
                if parts.len() != 2 {
                    return Err(Error::format("graph", format!("bad vertex line {line:?}")));
                }
                vertices.push(Vertex { feature: parse_num(parts[0], "graph")?, term: parts[1].to_string() });
            } else {
                if parts.len() != 3 {
                    return Err(Error::format("graph", format!("bad edge line {line:?}")));
                }
                edges.push((parse_num(parts[0], "graph")?, parse_num(parts[1], "graph")?, parse_num(parts[2], "graph")?));
            }
        }
        if vertices.len() != n_vertices || edges.len() != n_edges {
            return Err(Error::format(
                "graph",
                format!("expected {n_vertices} vertices and {n_edges} edges, found {} and {}", vertices.len(), edges.len()),
            ));
        }
        Self::new(vertices, edges, meta)
    }
}
