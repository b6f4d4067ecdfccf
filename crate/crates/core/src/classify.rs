//! Downstream classifiers on (expanded) instances and evaluation statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::expand::ExpandedInstance;
use crate::graph::ClassiNet;
use crate::logistic::{stratified_folds, Dataset, LogisticOptions};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownstreamOptions {
    pub lambda_grid: Vec<f64>,
    /// Share of the training data held out (stratified) to pick λ.
    pub dev_fraction: f64,
    pub logistic: LogisticOptions,
}

impl Default for DownstreamOptions {
    fn default() -> Self {
        Self {
            lambda_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 10.0],
            dev_fraction: 0.1,
            logistic: LogisticOptions::default(),
        }
    }
}

/// Logistic regression over the joint feature space. Two classes share one
/// weight vector (positive score means the larger label); more classes use
/// one-vs-rest with argmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownstreamModel {
    pub classes: Vec<i64>,
    pub weights: Vec<SparseVector>,
    pub biases: Vec<f64>,
    pub lambda: f64,
}

impl DownstreamModel {
    /// One score per weight vector.
    pub fn scores(&self, x: &SparseVector) -> Vec<f64> {
        self.weights.iter().zip(&self.biases).map(|(w, b)| w.dot(x) + b).collect()
    }

    pub fn predict(&self, x: &SparseVector) -> i64 {
        let s = self.scores(x);
        if self.classes.len() == 2 {
            return if s[0] > 0.0 { self.classes[1] } else { self.classes[0] };
        }
        let mut best = 0;
        for c in 1..s.len() {
            if s[c] > s[best] {
                best = c;
            }
        }
        self.classes[best]
    }
}

fn fit_model(ds_per_class: &[Dataset], classes: &[i64], rows: &[usize], lambda: f64, opts: &LogisticOptions) -> DownstreamModel {
    let mut weights = Vec::with_capacity(ds_per_class.len());
    let mut biases = Vec::with_capacity(ds_per_class.len());
    for ds in ds_per_class {
        let fit = ds.fit(rows, lambda, opts);
        weights.push(ds.to_sparse(&fit));
        biases.push(fit.bias);
    }
    DownstreamModel { classes: classes.to_vec(), weights, biases, lambda }
}

pub fn train_downstream(xs: &[SparseVector], labels: &[i64], opts: &DownstreamOptions, seed: u64) -> Result<DownstreamModel> {
    if xs.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: labels.len() });
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels);
    }
    if opts.lambda_grid.is_empty() || opts.lambda_grid.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(Error::config("lambda grid must be non-empty, finite and non-negative"));
    }
    if !(0.0..1.0).contains(&opts.dev_fraction) {
        return Err(Error::config("dev fraction must lie in [0, 1)"));
    }
    let refs: Vec<&SparseVector> = xs.iter().collect();
    let positives: Vec<i64> = if classes.len() == 2 { vec![classes[1]] } else { classes.clone() };
    let per_class: Vec<Dataset> = positives
        .iter()
        .map(|&c| Dataset::new(&refs, &labels.iter().map(|&l| l == c).collect::<Vec<_>>()))
        .collect();

    let mut grid = opts.lambda_grid.clone();
    grid.sort_by(f64::total_cmp);
    let all: Vec<usize> = (0..xs.len()).collect();

    // stratified dev split: one fold out of round(1 / dev_fraction)
    let n_folds = if opts.dev_fraction > 0.0 { (1.0 / opts.dev_fraction).round().max(2.0) as usize } else { 0 };
    let lambda = if n_folds >= 2 && grid.len() > 1 {
        let folds = stratified_folds(labels, n_folds, seed, "dev-split");
        let (train, dev): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&r| folds[r] != 0);
        if dev.is_empty() || train.is_empty() {
            grid[0]
        } else {
            let mut best = (f64::NEG_INFINITY, grid[0]);
            for &l in &grid {
                let m = fit_model(&per_class, &classes, &train, l, &opts.logistic);
                let acc = dev.iter().filter(|&&r| m.predict(&xs[r]) == labels[r]).count() as f64 / dev.len() as f64;
                if acc > best.0 {
                    best = (acc, l);
                }
            }
            best.1
        }
    } else {
        grid[0]
    };
    Ok(fit_model(&per_class, &classes, &all, lambda, &opts.logistic))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub label: i64,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionStats {
    /// Feature count after expansion over count before, per instance with at
    /// least one original feature.
    pub ratios: Vec<f64>,
    pub mean: f64,
    pub bin_width: f64,
    /// `(lower edge, count)` for every non-empty bin, ascending.
    pub histogram: Vec<(f64, usize)>,
    /// Centre of the fullest bin (lowest on ties).
    pub mode: f64,
    /// Instances with no original features, left out of the ratios.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassAccuracy>,
    pub folds: Vec<f64>,
    pub majority_label: i64,
    pub majority_baseline: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansion: Option<ExpansionStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_degree: Option<f64>,
}

fn report(predicted: &[i64], labels: &[i64], folds: Vec<f64>) -> EvalReport {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let per_class: Vec<ClassAccuracy> = classes
        .iter()
        .map(|&c| {
            let total = labels.iter().filter(|&&l| l == c).count();
            let correct = labels.iter().zip(predicted).filter(|(&l, &p)| l == c && p == c).count();
            ClassAccuracy { label: c, correct, total, accuracy: correct as f64 / total as f64 }
        })
        .collect();
    let correct = labels.iter().zip(predicted).filter(|(l, p)| l == p).count();
    let n = labels.len();
    let (majority_label, majority_count) = per_class
        .iter()
        .map(|c| (c.label, c.total))
        .fold((0, 0), |best, c| if c.1 > best.1 { c } else { best });
    EvalReport {
        n,
        accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
        per_class,
        folds,
        majority_label,
        majority_baseline: if n == 0 { 0.0 } else { majority_count as f64 / n as f64 },
        expansion: None,
        out_degree: None,
    }
}

pub fn evaluate(model: &DownstreamModel, xs: &[SparseVector], labels: &[i64]) -> EvalReport {
    let predicted: Vec<i64> = xs.iter().map(|x| model.predict(x)).collect();
    report(&predicted, labels, Vec::new())
}

/// Stratified k-fold cross-validation. Accuracy is pooled over all folds;
/// per-fold accuracies are listed in fold order.
pub fn cross_validate(
    xs: &[SparseVector],
    labels: &[i64],
    folds: usize,
    opts: &DownstreamOptions,
    seed: u64,
    workers: usize,
) -> Result<EvalReport> {
    use rayon::prelude::*;

    if folds < 2 {
        return Err(Error::config("cross-validation needs at least 2 folds"));
    }
    if xs.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: labels.len() });
    }
    if xs.len() < folds {
        return Err(Error::config(format!("{} instances cannot fill {folds} folds", xs.len())));
    }
    let assignment = fold_assignment(labels, folds, seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    let per_fold: Vec<Result<(Vec<usize>, Vec<i64>)>> = pool.install(|| {
        (0..folds)
            .into_par_iter()
            .map(|f| {
                let train: Vec<usize> = (0..xs.len()).filter(|&r| assignment[r] != f).collect();
                let test: Vec<usize> = (0..xs.len()).filter(|&r| assignment[r] == f).collect();
                let tx: Vec<SparseVector> = train.iter().map(|&r| xs[r].clone()).collect();
                let ty: Vec<i64> = train.iter().map(|&r| labels[r]).collect();
                let model = train_downstream(&tx, &ty, opts, crate::rng::derive_seed(seed, "fold-model", &[f as u64]))?;
                let pred = test.iter().map(|&r| model.predict(&xs[r])).collect();
                Ok((test, pred))
            })
            .collect()
    });
    let mut predicted = vec![0i64; xs.len()];
    let mut fold_acc = Vec::with_capacity(folds);
    for r in per_fold {
        let (test, pred) = r?;
        let correct = test.iter().zip(&pred).filter(|(&i, &p)| labels[i] == p).count();
        fold_acc.push(correct as f64 / test.len().max(1) as f64);
        for (i, p) in test.into_iter().zip(pred) {
            predicted[i] = p;
        }
    }
    Ok(report(&predicted, labels, fold_acc))
}

/// Fold of every instance: classes shuffled with a seeded stream and dealt
/// round-robin so fold sizes differ by at most one.
pub fn fold_assignment(labels: &[i64], folds: usize, seed: u64) -> Vec<usize> {
    stratified_folds(labels, folds, seed, "eval-folds")
}

/// Cross-validates on the joint vectors of expanded instances and attaches
/// expansion-ratio statistics.
pub fn cross_validate_expanded(
    expanded: &[ExpandedInstance],
    labels: &[i64],
    folds: usize,
    opts: &DownstreamOptions,
    seed: u64,
    workers: usize,
) -> Result<EvalReport> {
    let joint: Vec<SparseVector> = expanded.iter().map(|e| e.joint()).collect();
    let mut r = cross_validate(&joint, labels, folds, opts, seed, workers)?;
    r.expansion = Some(expansion_ratio(expanded, 0.5));
    Ok(r)
}

/// Mean total outgoing weight per vertex.
pub fn out_degree(net: &ClassiNet) -> f64 {
    if net.is_empty() {
        return 0.0;
    }
    net.edges().map(|(_, _, w)| w).sum::<f64>() / net.len() as f64
}

pub fn expansion_ratio(expanded: &[ExpandedInstance], bin_width: f64) -> ExpansionStats {
    assert!(bin_width > 0.0, "bin width must be positive");
    let mut ratios = Vec::with_capacity(expanded.len());
    let mut skipped = 0;
    for e in expanded {
        let before = e.original.nnz();
        if before == 0 {
            skipped += 1;
        } else {
            ratios.push(e.feature_count() as f64 / before as f64);
        }
    }
    let mean = if ratios.is_empty() { 0.0 } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
    let mut bins = std::collections::BTreeMap::<i64, usize>::new();
    for &r in &ratios {
        *bins.entry((r / bin_width).floor() as i64).or_default() += 1;
    }
    let mut mode_bin = None;
    for (&b, &c) in &bins {
        if mode_bin.is_none_or(|(_, best)| c > best) {
            mode_bin = Some((b, c));
        }
    }
    let mode = mode_bin.map_or(0.0, |(b, _)| (b as f64 + 0.5) * bin_width);
    ExpansionStats {
        ratios,
        mean,
        bin_width,
        histogram: bins.into_iter().map(|(b, c)| (b as f64 * bin_width, c)).collect(),
        mode,
        skipped,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    /// `(γ, accuracy)` sorted by γ.
    pub rows: Vec<(f64, f64)>,
    pub argmax: f64,
    pub best_accuracy: f64,
}

impl SweepTable {
    /// True when accuracy rises to its maximum and then falls, allowing dips
    /// of at most `tolerance` against the trend on either side.
    pub fn is_unimodal(&self, tolerance: f64) -> bool {
        let acc: Vec<f64> = self.rows.iter().map(|r| r.1).collect();
        let Some(peak) = acc.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i) else {
            return true;
        };
        let mut high = f64::NEG_INFINITY;
        for &a in &acc[..=peak] {
            if a < high - tolerance {
                return false;
            }
            high = high.max(a);
        }
        let mut low = f64::INFINITY;
        for &a in &acc[peak..] {
            if a > low + tolerance {
                return false;
            }
            low = low.min(a);
        }
        true
    }

    /// Tab-separated `gamma accuracy` rows with a header line.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("gamma\taccuracy\n");
        for (g, a) in &self.rows {
            s.push_str(&format!("{g}\t{a}\n"));
        }
        s
    }
}

/// Runs `cycle` (expand, train, evaluate) once per distinct γ, in ascending
/// order, and reports the best. Ties go to the smaller γ.
pub fn damping_sweep<F>(gammas: &[f64], mut cycle: F) -> Result<SweepTable>
where
    F: FnMut(f64) -> Result<f64>,
{
    if gammas.is_empty() {
        return Err(Error::config("no damping values to sweep"));
    }
    let mut sorted = gammas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut rows = Vec::with_capacity(sorted.len());
    for g in sorted {
        rows.push((g, cycle(g)?));
    }
    let (argmax, best_accuracy) = rows.iter().fold(rows[0], |b, &r| if r.1 > b.1 { r } else { b });
    Ok(SweepTable { rows, argmax, best_accuracy })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    pub mean_difference: f64,
    /// Two-tailed.
    pub p_value: f64,
}

impl TTest {
    pub fn significant(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Two-tailed paired t-test over matched samples (e.g. fold accuracies of
/// two methods on the same folds).
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::config("a paired t-test needs at least two pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    if var == 0.0 {
        let (t, p) = if mean == 0.0 { (0.0, 1.0) } else { (mean.signum() * f64::INFINITY, 0.0) };
        return Ok(TTest { t, df, mean_difference: mean, p_value: p });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::config(e.to_string()))?;
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(TTest { t, df, mean_difference: mean, p_value: p })
}
