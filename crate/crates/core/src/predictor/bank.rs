use std::io::{BufRead, Read, Write};

use super::FeaturePredictor;
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

const MAGIC: &[u8; 8] = b"CNPRED\x00\x01";

/// Trained predictors in vertex order: vertex `v` of a network built from
/// this bank is `predictors[v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorBank {
    dim: usize,
    predictors: Vec<FeaturePredictor>,
}

impl PredictorBank {
    pub fn new(dim: usize, predictors: Vec<FeaturePredictor>) -> Result<Self> {
        for p in &predictors {
            if p.weights().dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.weights().dim() });
            }
        }
        Ok(Self { dim, predictors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }

    pub fn predictors(&self) -> &[FeaturePredictor] {
        &self.predictors
    }

    pub fn get(&self, vertex: usize) -> &FeaturePredictor {
        &self.predictors[vertex]
    }

    /// Target feature of every vertex.
    pub fn features(&self) -> Vec<usize> {
        self.predictors.iter().map(|p| p.target()).collect()
    }

    /// Little-endian binary form: magic bytes, an ASCII header line, then per
    /// predictor `feature u64, bias f64, lambda f64, nnz u64` followed by
    /// `nnz` pairs of `(index u64, value f64)`.
    pub fn write_binary(&self, mut out: impl Write) -> Result<()> {
        out.write_all(MAGIC)?;
        writeln!(out, "classinet-predictors v1 {} {}", self.dim, self.predictors.len())?;
        for p in &self.predictors {
            out.write_all(&(p.target() as u64).to_le_bytes())?;
            out.write_all(&p.bias().to_le_bytes())?;
            out.write_all(&p.lambda().to_le_bytes())?;
            out.write_all(&(p.weights().nnz() as u64).to_le_bytes())?;
            for (i, v) in p.weights().iter() {
                out.write_all(&(i as u64).to_le_bytes())?;
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(mut input: impl BufRead) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::format("predictor bank", "bad magic bytes"));
        }
        let mut header = String::new();
        input.read_line(&mut header)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "classinet-predictors" || fields[1] != "v1" {
            return Err(Error::format("predictor bank", format!("bad header {header:?}")));
        }
        let dim: usize = crate::corpus::parse_num(fields[2], "predictor bank")?;
        let count: usize = crate::corpus::parse_num(fields[3], "predictor bank")?;

        let mut predictors = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let target = read_u64(&mut input)? as usize;
            let bias = read_f64(&mut input)?;
            let lambda = read_f64(&mut input)?;
            let nnz = read_u64(&mut input)? as usize;
            let mut entries = Vec::with_capacity(nnz.min(dim));
            for _ in 0..nnz {
                entries.push((read_u64(&mut input)? as usize, read_f64(&mut input)?));
            }
            let weights = SparseVector::from_sorted(dim, entries)?;
            predictors.push(FeaturePredictor::new(target, weights, bias, lambda)?);
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(Error::format("predictor bank", "trailing bytes"));
        }
        Self::new(dim, predictors)
    }

    /// Human-readable dump: the header line, then one line per predictor with
    /// `feature bias lambda nnz index:value ...`.
    pub fn write_text(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "classinet-predictors v1 {} {}", self.dim, self.predictors.len())?;
        for p in &self.predictors {
            write!(out, "{}\t{:.16e}\t{:.16e}\t{}", p.target(), p.bias(), p.lambda(), p.weights().nnz())?;
            for (i, v) in p.weights().iter() {
                write!(out, "\t{i}:{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(input: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
