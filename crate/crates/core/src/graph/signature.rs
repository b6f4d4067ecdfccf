//! Label vectors, confusion counts and the quantities derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::BinaryPredictor;
use crate::sparse::SparseVector;

/// The labels one predictor assigns to an ordered evaluation sample, packed
/// 64 per word. Bit `k` lives in word `k / 64` at position `63 - k % 64`, so
/// comparing the word slices compares the bit strings lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector {
    pub predictor: usize,
    pub sample_id: u64,
    len: usize,
    bits: Vec<u64>,
}

impl LabelVector {
    pub fn from_bools(predictor: usize, sample_id: u64, labels: &[bool]) -> Self {
        let mut bits = vec![0u64; labels.len().div_ceil(64)];
        for (k, _) in labels.iter().enumerate().filter(|(_, b)| **b) {
            bits[k / 64] |= 1 << (63 - k % 64);
        }
        Self { predictor, sample_id, len: labels.len(), bits }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, k: usize) -> bool {
        assert!(k < self.len, "bit {k} out of range");
        self.bits[k / 64] >> (63 - k % 64) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where the two vectors differ.
    pub fn hamming(&self, other: &LabelVector) -> usize {
        self.bits.iter().zip(&other.bits).map(|(a, b)| (a ^ b).count_ones() as usize).sum()
    }
}

/// Order-sensitive fingerprint of an evaluation sample.
pub fn sample_fingerprint(sample: &[SparseVector]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    let mut mix = |x: u64| {
        for b in x.to_le_bytes() {
            h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
        }
    };
    for x in sample {
        mix(x.dim() as u64);
        mix(x.nnz() as u64);
        for (i, v) in x.iter() {
            mix(i as u64);
            mix(v.to_bits());
        }
    }
    h
}

pub fn label_vector<P: BinaryPredictor + ?Sized>(predictor: usize, h: &P, sample: &[SparseVector]) -> LabelVector {
    label_vector_with_id(predictor, h, sample, sample_fingerprint(sample))
}

pub(crate) fn label_vector_with_id<P: BinaryPredictor + ?Sized>(
    predictor: usize,
    h: &P,
    sample: &[SparseVector],
    sample_id: u64,
) -> LabelVector {
    let labels: Vec<bool> = sample.iter().map(|x| h.fires(x)).collect();
    LabelVector::from_bools(predictor, sample_id, &labels)
}

/// Label vectors of every predictor over one shared sample.
pub fn lsh_signatures<P: BinaryPredictor>(predictors: &[P], sample: &[SparseVector], workers: usize) -> Result<Vec<LabelVector>> {
    use rayon::prelude::*;
    let id = sample_fingerprint(sample);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    Ok(pool.install(|| {
        predictors
            .par_iter()
            .enumerate()
            .map(|(v, h)| label_vector_with_id(v, h, sample, id))
            .collect()
    }))
}

/// Counts over an evaluation sample; the first index is predictor i's label,
/// the second predictor j's.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub m11: u64,
    pub m10: u64,
    pub m01: u64,
    pub m00: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.m11 + self.m10 + self.m01 + self.m00
    }

    pub fn disagreements(&self) -> u64 {
        self.m10 + self.m01
    }
}

pub fn confusion(li: &LabelVector, lj: &LabelVector) -> Result<ConfusionCounts> {
    if li.len != lj.len {
        return Err(Error::DimensionMismatch { expected: li.len, got: lj.len });
    }
    if li.sample_id != lj.sample_id {
        return Err(Error::config("label vectors were computed over different samples"));
    }
    let (mut m11, mut m10, mut m01) = (0u64, 0u64, 0u64);
    for (a, b) in li.bits.iter().zip(&lj.bits) {
        m11 += (a & b).count_ones() as u64;
        m10 += (a & !b).count_ones() as u64;
        m01 += (!a & b).count_ones() as u64;
    }
    let m00 = li.len as u64 - m11 - m10 - m01;
    Ok(ConfusionCounts { m11, m10, m01, m00 })
}

/// Counts from two label sequences given as booleans.
pub fn confusion_from_labels(li: &[bool], lj: &[bool]) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for (&a, &b) in li.iter().zip(lj) {
        match (a, b) {
            (true, true) => c.m11 += 1,
            (true, false) => c.m10 += 1,
            (false, true) => c.m01 += 1,
            (false, false) => c.m00 += 1,
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeight {
    pub value: f64,
    /// Set when predictor i never fired, so the ratio is undefined.
    pub degenerate: bool,
}

/// M11 / (M11 + M10): how often j fires given that i fires.
pub fn edge_weight(c: &ConfusionCounts) -> EdgeWeight {
    let fired = c.m11 + c.m10;
    if fired == 0 {
        EdgeWeight { value: 0.0, degenerate: true }
    } else {
        EdgeWeight { value: c.m11 as f64 / fired as f64, degenerate: false }
    }
}

/// Angle between the parameter vectors of two linear predictors, estimated
/// from the fraction of sample positions on which their labels disagree.
pub fn estimate_angle(li: &LabelVector, lj: &LabelVector) -> Result<f64> {
    if li.len != lj.len {
        return Err(Error::DimensionMismatch { expected: li.len, got: lj.len });
    }
    if li.len == 0 {
        return Err(Error::config("cannot estimate an angle from empty label vectors"));
    }
    Ok(std::f64::consts::PI * li.hamming(lj) as f64 / li.len as f64)
}
