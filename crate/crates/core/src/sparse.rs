//! Sorted sparse vectors used for instances, predictor weights and expanded
//! feature vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sparse vector over `dim` dimensions.
///
/// Entries are kept sorted by strictly increasing index, every index is below
/// `dim`, and no stored value is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    /// Builds a vector from entries that are already sorted, distinct and
    /// non-zero. Fails if any of those invariants is broken.
    pub fn from_sorted(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        for (pos, &(idx, val)) in entries.iter().enumerate() {
            if idx >= dim {
                return Err(Error::format("sparse vector", format!("index {idx} >= dim {dim}")));
            }
            if val == 0.0 || !val.is_finite() {
                return Err(Error::format("sparse vector", format!("bad value {val} at {idx}")));
            }
            if pos > 0 && entries[pos - 1].0 >= idx {
                return Err(Error::format("sparse vector", "indices not strictly increasing"));
            }
        }
        Ok(Self { dim, entries })
    }

    /// Builds a vector from arbitrary pairs: duplicates are summed and zero
    /// results are dropped. Indices out of range are an error.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        if let Some(&(idx, _)) = pairs.iter().find(|(i, _)| *i >= dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: idx + 1 });
        }
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (idx, val) in pairs {
            match entries.last_mut() {
                Some(last) if last.0 == idx => last.1 += val,
                _ => entries.push((idx, val)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        Ok(Self { dim, entries })
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        Self { dim: values.len(), entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn get(&self, idx: usize) -> f64 {
        match self.entries.binary_search_by_key(&idx, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.entries.binary_search_by_key(&idx, |&(i, _)| i).is_ok()
    }

    /// Copy of this vector with dimension `idx` removed.
    pub fn without(&self, idx: usize) -> Self {
        let entries = self.entries.iter().copied().filter(|&(i, _)| i != idx).collect();
        Self { dim: self.dim, entries }
    }

    /// Copy with `delta` added to dimension `idx` (inserting it if absent).
    pub fn with_added(&self, idx: usize, delta: f64) -> Self {
        let mut pairs = self.entries.clone();
        pairs.push((idx, delta));
        Self::from_pairs(self.dim, pairs).expect("index already validated against dim")
    }

    /// Same entries viewed in a larger space.
    pub fn widened(&self, dim: usize) -> Self {
        assert!(dim >= self.dim, "cannot shrink a sparse vector");
        Self { dim, entries: self.entries.clone() }
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    /// Sparse-sparse inner product by merging the two sorted index lists.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    pub fn norm2(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}
