//! Damped propagation of an instance's features along the network.
//!
//! Edge i→j carries p(j | i), so a path x→v₁→…→v scores the product of its
//! weights and the score of v sums those products over every walk of length
//! 1..=q, each damped by γ^length. In matrix form that is
//! `s = Σ_{h=1..q} γ^h (Wᵀ)^h x₀` where `W[i][j]` is the weight of i→j.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ExpansionCandidate, Method};
use crate::error::{Error, Result};
use crate::graph::ClassiNet;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prior {
    /// Every present feature starts with mass 1.
    Uniform,
    /// Present features start with their corpus frequency.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalExpansionConfig {
    pub gamma: f64,
    pub q: usize,
    /// Vertices scoring below this are not emitted.
    pub eps_score: f64,
    pub prior: Prior,
    /// Start from the instance's feature values instead of 1.
    pub weighted: bool,
}

impl Default for GlobalExpansionConfig {
    fn default() -> Self {
        Self { gamma: 0.85, q: 4, eps_score: 1e-4, prior: Prior::Uniform, weighted: false }
    }
}

impl GlobalExpansionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config(format!("damping {} outside (0, 1]", self.gamma)));
        }
        if self.q == 0 {
            return Err(Error::config("hop cap q must be at least 1"));
        }
        if !(self.eps_score >= 0.0) {
            return Err(Error::config("score floor must be non-negative"));
        }
        Ok(())
    }
}

/// Initial mass per vertex for instance `x`. Features outside the network
/// are ignored. `priors` (one per vertex) is required for the empirical mode.
pub fn initial_mass(net: &ClassiNet, x: &SparseVector, cfg: &GlobalExpansionConfig, priors: Option<&[f64]>) -> Result<Vec<f64>> {
    let mut x0 = vec![0.0; net.len()];
    for (f, value) in x.iter() {
        let Some(v) = net.vertex_of_feature(f) else { continue };
        let mut m = if cfg.weighted { value } else { 1.0 };
        if cfg.prior == Prior::Empirical {
            let p = priors.ok_or_else(|| Error::config("empirical prior needs per-vertex frequencies"))?;
            if p.len() != net.len() {
                return Err(Error::DimensionMismatch { expected: net.len(), got: p.len() });
            }
            m *= p[v];
        }
        x0[v] = m;
    }
    Ok(x0)
}

/// Truncated series Σ_{h=1..q} γ^h (Wᵀ)^h x₀, evaluated hop by hop.
pub fn global_scores(net: &ClassiNet, x0: &[f64], gamma: f64, q: usize) -> Vec<f64> {
    assert_eq!(x0.len(), net.len(), "one initial mass per vertex");
    let mut acc = vec![0.0; net.len()];
    let mut cur = x0.to_vec();
    for _ in 0..q {
        let mut next = vec![0.0; net.len()];
        for (s, &mass) in cur.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for e in net.out_edges(s) {
                next[e.target] += mass * e.weight;
            }
        }
        for (a, n) in acc.iter_mut().zip(next.iter_mut()) {
            *n *= gamma;
            *a += *n;
        }
        cur = next;
    }
    acc
}

pub fn global_candidates(
    net: &ClassiNet,
    x: &SparseVector,
    cfg: &GlobalExpansionConfig,
    priors: Option<&[f64]>,
) -> Result<Vec<ExpansionCandidate>> {
    cfg.validate()?;
    let x0 = initial_mass(net, x, cfg, priors)?;
    Ok(global_scores(net, &x0, cfg.gamma, cfg.q)
        .into_iter()
        .enumerate()
        .filter(|&(_, s)| s > 0.0 && s >= cfg.eps_score)
        .map(|(v, s)| ExpansionCandidate { vertex: v, feature: net.vertex(v).feature, score: s, method: Method::Global })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub radius: f64,
    /// 1 / (1 + ρ), capped at 1.
    pub suggested_gamma: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration on W + I (its dominant eigenvalue is ρ(W) + 1 for a
/// non-negative W, and the shift rules out oscillation on periodic graphs).
pub fn spectral_radius(net: &ClassiNet, iterations: usize, tol: f64) -> SpectralEstimate {
    let n = net.len();
    if n == 0 || net.edge_count() == 0 {
        return SpectralEstimate { radius: 0.0, suggested_gamma: 1.0, iterations: 0, converged: true };
    }
    let mut v = vec![1.0 / n as f64; n];
    let mut estimate = 0.0;
    let mut converged = false;
    let mut used = 0;
    for it in 0..iterations {
        used = it + 1;
        let mut next = v.clone();
        for (s, &mass) in v.iter().enumerate() {
            for e in net.out_edges(s) {
                next[e.target] += mass * e.weight;
            }
        }
        let norm: f64 = next.iter().sum();
        let change = (norm - estimate).abs();
        estimate = norm;
        next.iter_mut().for_each(|x| *x /= norm);
        v = next;
        if it > 0 && change <= tol * norm {
            converged = true;
            break;
        }
    }
    let radius = (estimate - 1.0).max(0.0);
    SpectralEstimate { radius, suggested_gamma: (1.0 / (1.0 + radius)).min(1.0), iterations: used, converged }
}

/// Largest network the dense closed form is allowed on.
pub const CLOSED_FORM_MAX_VERTICES: usize = 2000;

/// Closed form of the propagation series:
/// `(I − γWᵀ)⁻¹ (I − (γWᵀ)^{q+1}) x₀ − x₀`, or `(I − γWᵀ)⁻¹ x₀ − x₀` when
/// `q` is `None` (no truncation). Requires γρ(W) < 1.
pub fn closed_form_scores(net: &ClassiNet, x0: &[f64], gamma: f64, q: Option<usize>) -> Result<Vec<f64>> {
    let n = net.len();
    if n > CLOSED_FORM_MAX_VERTICES {
        return Err(Error::config(format!("closed form limited to {CLOSED_FORM_MAX_VERTICES} vertices, got {n}")));
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::config(format!("damping {gamma} outside (0, 1]")));
    }
    let rho = spectral_radius(net, 10_000, 1e-12).radius;
    if gamma * rho >= 1.0 {
        return Err(Error::config(format!("series diverges: γ·ρ(W) = {} ≥ 1", gamma * rho)));
    }
    // M = γWᵀ, so M[t][s] = γ w(s→t)
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (s, t, w) in net.edges() {
        m[(t, s)] = gamma * w;
    }
    let x = DVector::from_column_slice(x0);
    let mut rhs = x.clone();
    if let Some(q) = q {
        let mut p = x.clone();
        for _ in 0..=q {
            p = &m * p;
        }
        rhs -= p;
    }
    let a = DMatrix::<f64>::identity(n, n) - &m;
    let solved = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::config("I − γWᵀ is singular"))?;
    Ok((solved - x).iter().copied().collect())
}
