//! ℓ2-regularized logistic regression over sparse rows.
//!
//! The objective minimized for a subset of rows R is
//!
//! ```text
//! f(w, b) = 1/|R| Σ_{r∈R} ln(1 + exp(-y_r (wᵀx_r + b))) + λ/2 ‖w‖²
//! ```
//!
//! with y ∈ {-1, +1} and an unpenalized bias. Optimization is full-batch
//! L-BFGS with Armijo backtracking, starting from zero, so a fit is a pure
//! function of (rows, labels, λ, options). The initial inverse Hessian is the
//! inverse of the diagonal curvature bound λ + ¼·mean(x_j²), which keeps
//! features of very different scales from stalling the search.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::rng;
use crate::sparse::SparseVector;
use rand::seq::SliceRandom;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticOptions {
    pub max_iter: usize,
    /// Stop when the largest absolute gradient component drops below this.
    pub tol: f64,
    /// Number of correction pairs kept by L-BFGS.
    pub history: usize,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-6, history: 8 }
    }
}

/// Training rows remapped onto the features they actually use.
#[derive(Debug, Clone)]
pub struct Dataset {
    rows: Vec<Vec<(u32, f64)>>,
    labels: Vec<f64>,
    features: Vec<usize>,
    dim: usize,
}

impl Dataset {
    pub fn new(xs: &[&SparseVector], ys: &[bool]) -> Self {
        assert_eq!(xs.len(), ys.len(), "one label per row");
        let dim = xs.first().map(|x| x.dim()).unwrap_or(0);
        let mut local: HashMap<usize, u32> = HashMap::new();
        let mut features = Vec::new();
        let rows = xs
            .iter()
            .map(|x| {
                x.iter()
                    .map(|(i, v)| {
                        let id = *local.entry(i).or_insert_with(|| {
                            features.push(i);
                            (features.len() - 1) as u32
                        });
                        (id, v)
                    })
                    .collect()
            })
            .collect();
        let labels = ys.iter().map(|&y| if y { 1.0 } else { -1.0 }).collect();
        Self { rows, labels, features, dim }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Original index of every local feature, in local order.
    pub fn features(&self) -> &[usize] {
        &self.features
    }

    /// Number of distinct active features.
    pub fn width(&self) -> usize {
        self.features.len()
    }

    pub fn label(&self, row: usize) -> bool {
        self.labels[row] > 0.0
    }

    fn margin(&self, row: usize, w: &[f64], b: f64) -> f64 {
        self.rows[row].iter().map(|&(j, v)| w[j as usize] * v).sum::<f64>() + b
    }

    /// Upper bound on the diagonal of the objective's Hessian over `rows`,
    /// bias last.
    fn curvature(&self, rows: &[usize], lambda: f64) -> Vec<f64> {
        let n = rows.len().max(1) as f64;
        let mut d = vec![0.0; self.width() + 1];
        for &r in rows {
            for &(j, v) in &self.rows[r] {
                d[j as usize] += v * v;
            }
        }
        let m = d.len() - 1;
        for dj in &mut d[..m] {
            *dj = 0.25 * *dj / n + lambda;
        }
        d[m] = 0.25;
        d.iter().map(|&v| if v > 0.0 { v } else { 1.0 }).collect()
    }

    /// Objective value and gradient at (w, b). The gradient's last element is
    /// the bias component.
    pub fn objective(&self, rows: &[usize], w: &[f64], b: f64, lambda: f64) -> (f64, Vec<f64>) {
        let n = rows.len().max(1) as f64;
        let mut grad = vec![0.0; w.len() + 1];
        let mut loss = 0.0;
        for &r in rows {
            let y = self.labels[r];
            let z = -y * self.margin(r, w, b);
            loss += softplus(z);
            // d/dm softplus(-y m) = -y σ(-y m)
            let coef = -y * sigmoid(z) / n;
            for &(j, v) in &self.rows[r] {
                grad[j as usize] += coef * v;
            }
            grad[w.len()] += coef;
        }
        let mut reg = 0.0;
        for (g, &wj) in grad.iter_mut().zip(w) {
            *g += lambda * wj;
            reg += wj * wj;
        }
        (loss / n + 0.5 * lambda * reg, grad)
    }

    /// Fraction of `rows` whose sign prediction matches the label.
    pub fn accuracy(&self, rows: &[usize], fit: &Fit) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        let correct = rows
            .iter()
            .filter(|&&r| (self.margin(r, &fit.weights, fit.bias) > 0.0) == self.label(r))
            .count();
        correct as f64 / rows.len() as f64
    }

    pub fn fit(&self, rows: &[usize], lambda: f64, opts: &LogisticOptions) -> Fit {
        lbfgs(self, rows, lambda, opts)
    }

    /// Weights of a fit mapped back to the original feature space.
    pub fn to_sparse(&self, fit: &Fit) -> SparseVector {
        let pairs = self
            .features
            .iter()
            .zip(&fit.weights)
            .filter(|(_, w)| **w != 0.0)
            .map(|(&i, &w)| (i, w))
            .collect();
        SparseVector::from_pairs(self.dim, pairs).expect("features come from the input rows")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    /// Weights in the dataset's local feature order.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Fit {
    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lbfgs(ds: &Dataset, rows: &[usize], lambda: f64, opts: &LogisticOptions) -> Fit {
    let m = ds.width();
    let eval = |p: &[f64]| ds.objective(rows, &p[..m], p[m], lambda);
    let inv_diag: Vec<f64> = ds.curvature(rows, lambda).iter().map(|d| 1.0 / d).collect();

    let mut x = vec![0.0; m + 1];
    let (mut f, mut g) = eval(&x);
    let mut hist_s: Vec<Vec<f64>> = Vec::new();
    let mut hist_y: Vec<Vec<f64>> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..opts.max_iter {
        if g.iter().fold(0.0f64, |a, v| a.max(v.abs())) <= opts.tol {
            converged = true;
            break;
        }
        iterations = it + 1;

        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist_s.len());
        for (s, y) in hist_s.iter().zip(&hist_y).rev() {
            let rho = 1.0 / dot(y, s);
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push((rho, a));
        }
        let scale = match (hist_s.last(), hist_y.last()) {
            (Some(s), Some(y)) => {
                dot(s, y) / y.iter().zip(&inv_diag).map(|(yi, hi)| yi * yi * hi).sum::<f64>()
            }
            _ => 1.0,
        };
        q.iter_mut().zip(&inv_diag).for_each(|(v, h)| *v *= scale * h);
        for ((s, y), (rho, a)) in hist_s.iter().zip(&hist_y).zip(alphas.into_iter().rev()) {
            let beta = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - beta) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            hist_s.clear();
            hist_y.clear();
            dir = g.iter().zip(&inv_diag).map(|(v, h)| -v * h).collect();
            slope = dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-20 {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let (fc, gc) = eval(&cand);
            if fc <= f + 1e-4 * step * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 {
            if hist_s.len() == opts.history {
                hist_s.remove(0);
                hist_y.remove(0);
            }
            hist_s.push(s);
            hist_y.push(y);
        }
        let improvement = f - fnew;
        x = xn;
        f = fnew;
        g = gnew;
        if improvement.abs() <= f64::EPSILON * f.abs().max(1.0) {
            converged = g.iter().fold(0.0f64, |a, v| a.max(v.abs())) <= opts.tol.max(1e-8);
            break;
        }
    }
    if !converged && g.iter().fold(0.0f64, |a, v| a.max(v.abs())) <= opts.tol {
        converged = true;
    }

    let bias = x.pop().unwrap_or(0.0);
    Fit { weights: x, bias, objective: f, iterations, converged }
}

/// Stratified k-fold assignment: each class is shuffled with a seeded stream
/// and dealt round-robin, continuing the count across classes so fold sizes
/// differ by at most one.
pub fn stratified_folds<L: Ord + Clone>(labels: &[L], folds: usize, seed: u64, stream: &str) -> Vec<usize> {
    assert!(folds >= 1);
    let mut classes: Vec<L> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let mut assignment = vec![0usize; labels.len()];
    let mut counter = 0usize;
    for (ci, class) in classes.iter().enumerate() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| &labels[i] == class).collect();
        members.shuffle(&mut rng::stream(seed, stream, &[ci as u64]));
        for m in members {
            assignment[m] = counter % folds;
            counter += 1;
        }
    }
    assignment
}

/// Picks λ by k-fold accuracy (ties go to the smaller λ) and refits on every
/// row. Returns the final fit, the chosen λ and its mean held-out accuracy.
pub fn cross_validated_fit(
    ds: &Dataset,
    lambda_grid: &[f64],
    folds: usize,
    opts: &LogisticOptions,
    seed: u64,
) -> (Fit, f64, f64) {
    assert!(!lambda_grid.is_empty(), "empty lambda grid");
    let all: Vec<usize> = (0..ds.len()).collect();
    let mut grid = lambda_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite lambdas"));

    let folds = folds.min(ds.len());
    if folds < 2 {
        let fit = ds.fit(&all, grid[0], opts);
        let acc = ds.accuracy(&all, &fit);
        return (fit, grid[0], acc);
    }
    let labels: Vec<bool> = (0..ds.len()).map(|r| ds.label(r)).collect();
    let assignment = stratified_folds(&labels, folds, seed, "cv-folds");

    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &lambda in &grid {
        let mut acc_sum = 0.0;
        for fold in 0..folds {
            let (train, test): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&r| assignment[r] != fold);
            let fit = ds.fit(&train, lambda, opts);
            acc_sum += ds.accuracy(&test, &fit);
        }
        let acc = acc_sum / folds as f64;
        if acc > best.0 {
            best = (acc, lambda);
        }
    }
    let fit = ds.fit(&all, best.1, opts);
    (fit, best.1, best.0)
}
