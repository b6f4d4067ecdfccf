//! Feature predictors: binary classifiers that guess whether a feature occurs
//! in an instance from the instance's other features.

mod bank;

pub use bank::PredictorBank;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::corpus::{average_nnz, InvertedIndex};
use crate::error::{Error, Result};
use crate::logistic::{self, sigmoid, Dataset, LogisticOptions};
use crate::rng;
use crate::sparse::SparseVector;

/// Anything that labels an instance with a firing probability.
pub trait BinaryPredictor: Send + Sync {
    fn score(&self, x: &SparseVector) -> f64;

    fn fires(&self, x: &SparseVector) -> bool {
        self.score(x) > 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: bool,
    pub score: f64,
}

/// Fires exactly when its feature is non-zero. With these predictors the
/// network degenerates to a conditional co-occurrence graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndicatorPredictor {
    pub feature: usize,
}

impl BinaryPredictor for IndicatorPredictor {
    fn score(&self, x: &SparseVector) -> f64 {
        if x.contains(self.feature) {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub n_positive: usize,
    pub n_negative: usize,
    /// Mean cross-validation accuracy of the chosen λ.
    pub heldout_accuracy: f64,
    pub converged: bool,
    pub negatives_truncated: bool,
}

/// Logistic-regression predictor for one target feature. The target's own
/// dimension never carries weight, so it is ignored at prediction time.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePredictor {
    target: usize,
    weights: SparseVector,
    bias: f64,
    lambda: f64,
    pub meta: TrainingMeta,
}

impl FeaturePredictor {
    pub fn new(target: usize, weights: SparseVector, bias: f64, lambda: f64) -> Result<Self> {
        if weights.contains(target) {
            return Err(Error::config(format!("predictor for {target} weights its own feature")));
        }
        if target >= weights.dim() {
            return Err(Error::DimensionMismatch { expected: weights.dim(), got: target + 1 });
        }
        Ok(Self { target, weights, bias, lambda, meta: TrainingMeta::default() })
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn weights(&self) -> &SparseVector {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn margin(&self, x: &SparseVector) -> f64 {
        self.weights.dot(x) + self.bias
    }

    pub fn predict(&self, x: &SparseVector) -> Prediction {
        let score = sigmoid(self.margin(x));
        Prediction { label: score > 0.5, score }
    }
}

impl BinaryPredictor for FeaturePredictor {
    fn score(&self, x: &SparseVector) -> f64 {
        self.predict(x).score
    }
}

/// Training data for one feature: positives have the feature removed,
/// negatives never had it. Ids index the vectors the sample was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorSample {
    pub target: usize,
    pub positives: Vec<SparseVector>,
    pub negatives: Vec<SparseVector>,
    pub positive_ids: Vec<usize>,
    pub negative_ids: Vec<usize>,
    pub negatives_truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    pub min_positive: usize,
    /// Negatives drawn per positive.
    pub negative_ratio: usize,
    /// Subsample positives down to this many (uniformly, seeded). `None`
    /// keeps every qualifying instance.
    pub max_positives: Option<usize>,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self { min_positive: 5, negative_ratio: 2, max_positives: None }
    }
}

/// Picks positives (instances containing `feature` that are longer than
/// `avg_nnz`) and uniformly samples negatives from instances lacking it.
pub fn select_training_instances(
    vectors: &[SparseVector],
    index: &InvertedIndex,
    avg_nnz: f64,
    feature: usize,
    opts: &SelectionOptions,
    seed: u64,
) -> Result<PredictorSample> {
    let containing = index.postings(feature);
    let mut positive_ids: Vec<usize> =
        containing.iter().copied().filter(|&d| vectors[d].nnz() as f64 > avg_nnz).collect();
    if positive_ids.len() < opts.min_positive.max(1) {
        return Err(Error::InsufficientPositives(feature));
    }
    let mut rng = rng::stream(seed, "predictor-sample", &[feature as u64]);
    if let Some(cap) = opts.max_positives {
        if positive_ids.len() > cap {
            positive_ids.shuffle(&mut rng);
            positive_ids.truncate(cap);
            positive_ids.sort_unstable();
        }
    }

    let mut lacking = Vec::with_capacity(vectors.len() - containing.len());
    let mut c = containing.iter().peekable();
    for d in 0..vectors.len() {
        if c.peek() == Some(&&d) {
            c.next();
        } else {
            lacking.push(d);
        }
    }
    let wanted = opts.negative_ratio * positive_ids.len();
    let negatives_truncated = wanted > lacking.len();
    let mut negative_ids: Vec<usize> = if negatives_truncated {
        lacking
    } else {
        index::sample(&mut rng, lacking.len(), wanted).into_iter().map(|k| lacking[k]).collect()
    };
    negative_ids.sort_unstable();

    Ok(PredictorSample {
        target: feature,
        positives: positive_ids.iter().map(|&d| vectors[d].without(feature)).collect(),
        negatives: negative_ids.iter().map(|&d| vectors[d].clone()).collect(),
        positive_ids,
        negative_ids,
        negatives_truncated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub lambda_grid: Vec<f64>,
    pub folds: usize,
    pub logistic: LogisticOptions,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            lambda_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 10.0],
            folds: 5,
            logistic: LogisticOptions::default(),
        }
    }
}

pub fn train_predictor(sample: &PredictorSample, opts: &TrainOptions, seed: u64) -> Result<FeaturePredictor> {
    if sample.positives.is_empty() {
        return Err(Error::InsufficientPositives(sample.target));
    }
    if sample.negatives.is_empty() {
        return Err(Error::DegenerateLabels);
    }
    if opts.lambda_grid.is_empty() || opts.lambda_grid.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(Error::config("lambda grid must be non-empty, finite and non-negative"));
    }
    let dim = sample.positives[0].dim();
    let rows: Vec<&SparseVector> = sample.positives.iter().chain(&sample.negatives).collect();
    let labels: Vec<bool> = (0..rows.len()).map(|r| r < sample.positives.len()).collect();
    let ds = Dataset::new(&rows, &labels);
    let fold_seed = rng::derive_seed(seed, "predictor-folds", &[sample.target as u64]);
    let (fit, lambda, acc) = logistic::cross_validated_fit(&ds, &opts.lambda_grid, opts.folds, &opts.logistic, fold_seed);
    if !fit.converged {
        log::warn!("predictor {} stopped after {} iterations without converging", sample.target, fit.iterations);
    }
    let weights = if dim == 0 { SparseVector::zeros(0) } else { ds.to_sparse(&fit).without(sample.target) };
    let mut p = FeaturePredictor::new(sample.target, weights, fit.bias, lambda)?;
    p.meta = TrainingMeta {
        n_positive: sample.positives.len(),
        n_negative: sample.negatives.len(),
        heldout_accuracy: acc,
        converged: fit.converged,
        negatives_truncated: sample.negatives_truncated,
    };
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankOptions {
    pub selection: SelectionOptions,
    pub training: TrainOptions,
    /// Worker threads for the parallel map over features.
    pub workers: usize,
}

impl Default for BankOptions {
    fn default() -> Self {
        Self {
            selection: SelectionOptions::default(),
            training: TrainOptions::default(),
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

/// Trains one predictor per requested feature in parallel. Features with too
/// few positives are skipped and returned separately. Output order follows
/// `features`, whatever the scheduling.
pub fn train_bank(
    vectors: &[SparseVector],
    dim: usize,
    features: &[usize],
    opts: &BankOptions,
    seed: u64,
) -> Result<(PredictorBank, Vec<usize>)> {
    use rayon::prelude::*;

    if vectors.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let index = InvertedIndex::new(vectors, dim);
    let avg = average_nnz(vectors);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    let results: Vec<Result<FeaturePredictor>> = pool.install(|| {
        features
            .par_iter()
            .map(|&f| {
                let sample = select_training_instances(vectors, &index, avg, f, &opts.selection, seed)?;
                train_predictor(&sample, &opts.training, seed)
            })
            .collect()
    });

    let mut predictors = Vec::new();
    let mut skipped = Vec::new();
    for (&f, r) in features.iter().zip(results) {
        match r {
            Ok(p) => predictors.push(p),
            Err(Error::InsufficientPositives(_)) | Err(Error::DegenerateLabels) => {
                log::debug!("skipping feature {f}: not enough training instances");
                skipped.push(f);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((PredictorBank::new(dim, predictors)?, skipped))
}
