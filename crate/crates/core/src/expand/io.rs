//! JSON-lines stream of expanded instances.
//!
//! The first line is a header object carrying the format tag and the run
//! configuration; each following line is one record. Numbers are printed
//! with 17 significant digits so they parse back to the same `f64`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{ExpandedInstance, Method, EXP_PREFIX};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

const FORMAT: &str = "classinet-expanded v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedHeader {
    pub format: String,
    #[serde(default)]
    pub config: serde_json::Value,
}

impl ExpandedHeader {
    pub fn new(config: serde_json::Value) -> Self {
        Self { format: FORMAT.to_string(), config }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedRecord {
    pub id: String,
    pub features: BTreeMap<String, f64>,
    pub exp_features: BTreeMap<String, f64>,
    pub method: Method,
    pub gamma: Option<f64>,
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<i64>,
}

impl ExpandedRecord {
    pub fn from_instance(id: &str, label: Option<i64>, inst: &ExpandedInstance, vocab: &Vocabulary, gamma: Option<f64>, q: Option<usize>) -> Self {
        Self {
            id: id.to_string(),
            features: inst.features.iter().map(|(i, v)| (vocab.term(i).to_string(), v)).collect(),
            exp_features: inst.expansions.iter().map(|(i, v)| (format!("{EXP_PREFIX}{}", vocab.term(i)), v)).collect(),
            method: inst.method,
            gamma,
            q,
            label,
        }
    }

    /// Joint vector (features, then expansions offset by the vocabulary size).
    pub fn joint(&self, vocab: &Vocabulary) -> Result<SparseVector> {
        let d = vocab.len();
        let lookup = |t: &str| {
            vocab
                .index_of(t)
                .ok_or_else(|| Error::format("expanded record", format!("term {t:?} not in vocabulary")))
        };
        let mut pairs = Vec::with_capacity(self.features.len() + self.exp_features.len());
        for (t, &v) in &self.features {
            pairs.push((lookup(t)?, v));
        }
        for (t, &v) in &self.exp_features {
            let bare = t
                .strip_prefix(EXP_PREFIX)
                .ok_or_else(|| Error::format("expanded record", format!("expansion {t:?} lacks the prefix")))?;
            pairs.push((d + lookup(bare)?, v));
        }
        SparseVector::from_pairs(2 * d, pairs)
    }
}

fn number(out: &mut String, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::format("expanded record", format!("non-finite value {v}")));
    }
    out.push_str(&format!("{v:.16e}"));
    Ok(())
}

fn map(out: &mut String, m: &BTreeMap<String, f64>) -> Result<()> {
    out.push('{');
    for (n, (k, &v)) in m.iter().enumerate() {
        if n > 0 {
            out.push(',');
        }
        out.push_str(&serde_json::to_string(k)?);
        out.push(':');
        number(out, v)?;
    }
    out.push('}');
    Ok(())
}

pub fn write_expanded<'a>(mut out: impl Write, header: &ExpandedHeader, records: impl IntoIterator<Item = &'a ExpandedRecord>) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string(header)?)?;
    for r in records {
        let mut line = String::new();
        line.push_str("{\"id\":");
        line.push_str(&serde_json::to_string(&r.id)?);
        if let Some(label) = r.label {
            line.push_str(&format!(",\"label\":{label}"));
        }
        line.push_str(",\"features\":");
        map(&mut line, &r.features)?;
        line.push_str(",\"exp_features\":");
        map(&mut line, &r.exp_features)?;
        line.push_str(",\"method\":");
        line.push_str(&serde_json::to_string(&r.method)?);
        line.push_str(",\"gamma\":");
        match r.gamma {
            Some(g) => number(&mut line, g)?,
            None => line.push_str("null"),
        }
        line.push_str(",\"q\":");
        match r.q {
            Some(q) => line.push_str(&q.to_string()),
            None => line.push_str("null"),
        }
        line.push('}');
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_expanded(input: impl BufRead) -> Result<(ExpandedHeader, Vec<ExpandedRecord>)> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| Error::format("expanded stream", "empty input"))??;
    let header: ExpandedHeader = serde_json::from_str(&first)?;
    if header.format != FORMAT {
        return Err(Error::format("expanded stream", format!("unknown format {:?}", header.format)));
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok((header, records))
}
