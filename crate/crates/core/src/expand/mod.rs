//! Feature expansion: adding predicted features to sparse instances.
//!
//! Expansion features live in their own namespace. An expansion of vocabulary
//! feature `f` is rendered as `EXP=<term>` and, in the joint vector handed to
//! a classifier, occupies index `d + f` where `d` is the vocabulary size.

mod global;
mod io;
mod local;

pub use global::{
    closed_form_scores, global_candidates, global_scores, initial_mass, spectral_radius, GlobalExpansionConfig, Prior,
    SpectralEstimate, CLOSED_FORM_MAX_VERTICES,
};
pub use io::{read_expanded, write_expanded, ExpandedHeader, ExpandedRecord};
pub use local::{
    all_neighbour_candidates, independent_candidates, local_path_candidates, mutual_neighbour_candidates,
    reverse_adjacency, shortest_path_vertices, BankScorer, MutualKnnGraph,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ClassiNet;
use crate::sparse::SparseVector;

pub const EXP_PREFIX: &str = "EXP=";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "independent")]
    Independent,
    #[serde(rename = "local-path")]
    LocalPath,
    #[serde(rename = "all-nn")]
    AllNeighbours,
    #[serde(rename = "mutual-nn")]
    MutualNeighbours,
    #[serde(rename = "global")]
    Global,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::None,
        Method::Independent,
        Method::LocalPath,
        Method::AllNeighbours,
        Method::MutualNeighbours,
        Method::Global,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Independent => "independent",
            Method::LocalPath => "local-path",
            Method::AllNeighbours => "all-nn",
            Method::MutualNeighbours => "mutual-nn",
            Method::Global => "global",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown expansion method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCandidate {
    pub vertex: usize,
    /// Vocabulary feature the vertex predicts.
    pub feature: usize,
    pub score: f64,
    pub method: Method,
}

/// An instance after expansion. `features` is the original vector, except
/// that independent-style expansion adds a firing predictor's output to its
/// own feature when that feature is already present. `expansions` is indexed
/// by vocabulary feature but belongs to the separate expansion namespace.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedInstance {
    pub original: SparseVector,
    pub features: SparseVector,
    pub expansions: SparseVector,
    pub method: Method,
}

impl ExpandedInstance {
    pub fn unexpanded(x: &SparseVector) -> Self {
        Self { original: x.clone(), features: x.clone(), expansions: SparseVector::zeros(x.dim()), method: Method::None }
    }

    /// Features followed by expansions shifted past the vocabulary, in a
    /// space of twice the vocabulary size.
    pub fn joint(&self) -> SparseVector {
        let d = self.features.dim();
        let entries = self
            .features
            .iter()
            .chain(self.expansions.iter().map(|(i, v)| (d + i, v)))
            .collect();
        SparseVector::from_sorted(2 * d, entries).expect("both halves sorted and non-zero")
    }

    /// Non-zero count after expansion.
    pub fn feature_count(&self) -> usize {
        self.features.nnz() + self.expansions.nnz()
    }
}

/// Renders candidates as expansion features. Repeated candidates for the same
/// feature are merged by summing their scores.
pub fn render_expansion(x: &SparseVector, candidates: &[ExpansionCandidate], method: Method) -> ExpandedInstance {
    let pairs = candidates.iter().filter(|c| c.score != 0.0).map(|c| (c.feature, c.score)).collect();
    let expansions = SparseVector::from_pairs(x.dim(), pairs).expect("candidate features come from the vocabulary");
    ExpandedInstance { original: x.clone(), features: x.clone(), expansions, method }
}

/// Independent rendering: a candidate for a feature already present adds its
/// score to that feature; others become expansion features.
fn render_in_place(x: &SparseVector, candidates: &[ExpansionCandidate], method: Method) -> ExpandedInstance {
    let mut features = x.entries().to_vec();
    let mut exp = Vec::new();
    for c in candidates {
        if x.contains(c.feature) {
            features.push((c.feature, c.score));
        } else {
            exp.push((c.feature, c.score));
        }
    }
    ExpandedInstance {
        original: x.clone(),
        features: SparseVector::from_pairs(x.dim(), features).expect("features from the vocabulary"),
        expansions: SparseVector::from_pairs(x.dim(), exp).expect("features from the vocabulary"),
        method,
    }
}

pub fn expand_independent(scorer: &BankScorer, x: &SparseVector, posterior: bool) -> ExpandedInstance {
    render_in_place(x, &independent_candidates(scorer, x, posterior), Method::Independent)
}

pub fn expand_local_path(
    net: &ClassiNet,
    rev: &[Vec<usize>],
    scorer: &BankScorer,
    x: &SparseVector,
    max_hops: usize,
    posterior: bool,
) -> ExpandedInstance {
    render_in_place(x, &local_path_candidates(net, rev, scorer, x, max_hops, posterior), Method::LocalPath)
}

pub fn expand_all_neighbours(net: &ClassiNet, g: &MutualKnnGraph, x: &SparseVector) -> ExpandedInstance {
    render_expansion(x, &all_neighbour_candidates(net, g, x), Method::AllNeighbours)
}

pub fn expand_mutual_neighbours(net: &ClassiNet, g: &MutualKnnGraph, x: &SparseVector) -> ExpandedInstance {
    render_expansion(x, &mutual_neighbour_candidates(net, g, x), Method::MutualNeighbours)
}

pub fn expand_global(
    net: &ClassiNet,
    x: &SparseVector,
    cfg: &GlobalExpansionConfig,
    priors: Option<&[f64]>,
) -> Result<ExpandedInstance> {
    Ok(render_expansion(x, &global_candidates(net, x, cfg, priors)?, Method::Global))
}

/// A fully parameterized expansion method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ExpansionMethod {
    None,
    Independent { posterior: bool },
    LocalPath { max_hops: usize, posterior: bool },
    AllNn { k: usize },
    MutualNn { k: usize },
    Global(GlobalExpansionConfig),
}

impl ExpansionMethod {
    pub fn tag(&self) -> Method {
        match self {
            ExpansionMethod::None => Method::None,
            ExpansionMethod::Independent { .. } => Method::Independent,
            ExpansionMethod::LocalPath { .. } => Method::LocalPath,
            ExpansionMethod::AllNn { .. } => Method::AllNeighbours,
            ExpansionMethod::MutualNn { .. } => Method::MutualNeighbours,
            ExpansionMethod::Global(_) => Method::Global,
        }
    }

    /// The method with its default parameters.
    pub fn default_for(tag: Method) -> Self {
        match tag {
            Method::None => ExpansionMethod::None,
            Method::Independent => ExpansionMethod::Independent { posterior: false },
            Method::LocalPath => ExpansionMethod::LocalPath { max_hops: 3, posterior: false },
            Method::AllNeighbours => ExpansionMethod::AllNn { k: 4 },
            Method::MutualNeighbours => ExpansionMethod::MutualNn { k: 4 },
            Method::Global => ExpansionMethod::Global(GlobalExpansionConfig::default()),
        }
    }
}

/// Precomputed state for expanding many instances against one network.
pub struct Expander<'a> {
    net: &'a ClassiNet,
    scorer: Option<BankScorer>,
    reverse: Vec<Vec<usize>>,
    mutual: std::collections::HashMap<usize, MutualKnnGraph>,
    priors: Option<Vec<f64>>,
}

impl<'a> Expander<'a> {
    /// `scorer` is required by the predictor-based methods (independent and
    /// local-path); the graph-only methods work without it.
    pub fn new(net: &'a ClassiNet, scorer: Option<BankScorer>) -> Result<Self> {
        if let Some(s) = &scorer {
            let net_features: Vec<usize> = net.vertices().iter().map(|v| v.feature).collect();
            if s.targets() != net_features.as_slice() {
                return Err(Error::config("predictor bank and network disagree on vertices"));
            }
        }
        Ok(Self { net, scorer, reverse: reverse_adjacency(net), mutual: Default::default(), priors: None })
    }

    /// Per-vertex frequencies used by the empirical prior.
    pub fn with_priors(mut self, priors: Vec<f64>) -> Self {
        self.priors = Some(priors);
        self
    }

    /// Builds the mutual k-NN graphs a batch of methods will need.
    pub fn prepare(&mut self, method: &ExpansionMethod) {
        if let ExpansionMethod::AllNn { k } | ExpansionMethod::MutualNn { k } = *method {
            self.mutual.entry(k).or_insert_with(|| MutualKnnGraph::build(self.net, k));
        }
    }

    fn scorer(&self) -> Result<&BankScorer> {
        self.scorer.as_ref().ok_or_else(|| Error::config("this expansion method needs the predictor bank"))
    }

    fn graph(&self, k: usize) -> Result<&MutualKnnGraph> {
        self.mutual.get(&k).ok_or_else(|| Error::config(format!("mutual {k}-NN graph not prepared")))
    }

    pub fn expand(&self, x: &SparseVector, method: &ExpansionMethod) -> Result<ExpandedInstance> {
        if let Some(s) = &self.scorer {
            if x.dim() != s.dim() {
                return Err(Error::DimensionMismatch { expected: s.dim(), got: x.dim() });
            }
        }
        Ok(match *method {
            ExpansionMethod::None => ExpandedInstance::unexpanded(x),
            ExpansionMethod::Independent { posterior } => expand_independent(self.scorer()?, x, posterior),
            ExpansionMethod::LocalPath { max_hops, posterior } => {
                expand_local_path(self.net, &self.reverse, self.scorer()?, x, max_hops, posterior)
            }
            ExpansionMethod::AllNn { k } => expand_all_neighbours(self.net, self.graph(k)?, x),
            ExpansionMethod::MutualNn { k } => expand_mutual_neighbours(self.net, self.graph(k)?, x),
            ExpansionMethod::Global(cfg) => expand_global(self.net, x, &cfg, self.priors.as_deref())?,
        })
    }

    pub fn expand_all(&mut self, xs: &[SparseVector], method: &ExpansionMethod) -> Result<Vec<ExpandedInstance>> {
        self.prepare(method);
        xs.iter().map(|x| self.expand(x, method)).collect()
    }
}
