//! Text ingestion: documents, tokenization, vocabularies and sparse
//! vectorization (binary, tf or tf-idf).

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<i64>,
}

/// Reads a JSON-lines corpus. Ids must be unique and texts non-empty after
/// whitespace normalization.
pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_jsonl(std::io::BufReader::new(file))
}

pub fn parse_jsonl(reader: impl BufRead) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line)
            .map_err(|e| Error::format("corpus line", format!("line {}: {e}", lineno + 1)))?;
        if doc.text.split_whitespace().next().is_none() {
            return Err(Error::format("corpus line", format!("line {}: empty text", lineno + 1)));
        }
        if !seen.insert(doc.id.clone()) {
            return Err(Error::format("corpus line", format!("duplicate id {:?}", doc.id)));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_jsonl(mut out: impl Write, docs: &[Document]) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Lowercasing tokenizer splitting on non-alphanumeric characters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenizer {
    /// Strip a trailing plural "s" ("dogs" -> "dog").
    pub lemma_heuristic: bool,
}

impl Tokenizer {
    pub fn new(lemma_heuristic: bool) -> Self {
        Self { lemma_heuristic }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| {
                let t = t.to_lowercase();
                if self.lemma_heuristic {
                    depluralize(t)
                } else {
                    t
                }
            })
            .collect()
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}

fn depluralize(token: String) -> String {
    let n = token.chars().count();
    if n >= 4
        && token.ends_with('s')
        && !token.ends_with("ss")
        && !token.ends_with("us")
        && !token.ends_with("is")
    {
        let mut t = token;
        t.pop();
        t
    } else {
        token
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Binary,
    Tf,
    Tfidf,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Weighting::Binary),
            "tf" => Ok(Weighting::Tf),
            "tfidf" => Ok(Weighting::Tfidf),
            other => Err(Error::config(format!("unknown weighting {other:?}"))),
        }
    }
}

/// Terms ordered by descending document frequency, then lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<u64>,
    n_docs: u64,
    /// idf = ln(N/df) + 1 instead of ln(N/df).
    pub smooth_idf: bool,
}

impl Vocabulary {
    /// Builds a vocabulary from per-document token lists, keeping terms whose
    /// document frequency is at least `min_count`.
    pub fn from_token_lists<I, T>(docs: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[String]>,
    {
        if min_count < 1 {
            return Err(Error::config("min_count must be >= 1"));
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        let mut n_docs = 0u64;
        for tokens in docs {
            n_docs += 1;
            let uniq: HashSet<&String> = tokens.as_ref().iter().collect();
            for t in uniq {
                *counts.entry(t.clone()).or_default() += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut kept: Vec<(String, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(Self::from_parts(kept, n_docs))
    }

    fn from_parts(kept: Vec<(String, u64)>, n_docs: u64) -> Self {
        let index = kept.iter().enumerate().map(|(i, (t, _))| (t.clone(), i)).collect();
        let (terms, df) = kept.into_iter().unzip();
        Self { terms, index, df, n_docs, smooth_idf: false }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, idx: usize) -> &str {
        &self.terms[idx]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, idx: usize) -> u64 {
        self.df[idx]
    }

    pub fn idf(&self, idx: usize) -> f64 {
        let raw = (self.n_docs as f64 / self.df[idx] as f64).ln();
        if self.smooth_idf {
            raw + 1.0
        } else {
            raw
        }
    }

    /// Maps tokens to a sparse vector; out-of-vocabulary tokens are dropped
    /// and zero-valued terms (tf-idf with df = N) are elided.
    pub fn vectorize(&self, tokens: &[String], weighting: Weighting) -> SparseVector {
        let mut tf: HashMap<usize, f64> = HashMap::new();
        for t in tokens {
            if let Some(i) = self.index_of(t) {
                *tf.entry(i).or_default() += 1.0;
            }
        }
        let pairs = tf
            .into_iter()
            .map(|(i, count)| {
                let v = match weighting {
                    Weighting::Binary => 1.0,
                    Weighting::Tf => count,
                    Weighting::Tfidf => count * self.idf(i),
                };
                (i, v)
            })
            .collect();
        SparseVector::from_pairs(self.len(), pairs).expect("vocabulary indices are in range")
    }

    pub fn write(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "classinet-vocab v1 {} {}", self.n_docs, self.terms.len())?;
        for (t, df) in self.terms.iter().zip(&self.df) {
            writeln!(out, "{t}\t{df}")?;
        }
        Ok(())
    }

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| Error::format("vocabulary", "missing header"))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "classinet-vocab" || parts[1] != "v1" {
            return Err(Error::format("vocabulary", format!("bad header {header:?}")));
        }
        let n_docs: u64 = parse_num(parts[2], "vocabulary")?;
        let count: usize = parse_num(parts[3], "vocabulary")?;
        let mut kept = Vec::with_capacity(count);
        for line in lines.take(count) {
            let line = line?;
            let (term, df) = line
                .split_once('\t')
                .ok_or_else(|| Error::format("vocabulary", format!("bad line {line:?}")))?;
            let df: u64 = parse_num(df, "vocabulary")?;
            if df > n_docs {
                return Err(Error::format("vocabulary", format!("df {df} exceeds N {n_docs}")));
            }
            kept.push((term.to_string(), df));
        }
        if kept.len() != count {
            return Err(Error::format("vocabulary", "truncated term list"));
        }
        Ok(Self::from_parts(kept, n_docs))
    }
}

pub(crate) fn parse_num<T: std::str::FromStr>(s: &str, what: &'static str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::format(what, format!("not a number: {s:?}")))
}

/// Tokenizes every document and builds the vocabulary over them.
pub fn build_vocabulary(corpus: &[Document], tokenizer: &Tokenizer, min_count: u64) -> Result<Vocabulary> {
    Vocabulary::from_token_lists(corpus.iter().map(|d| tokenizer.tokenize(&d.text)), min_count)
}

pub fn vectorize(tokens: &[String], vocab: &Vocabulary, weighting: Weighting) -> SparseVector {
    vocab.vectorize(tokens, weighting)
}

/// Vectorizes a whole corpus with a shared tokenizer and vocabulary.
pub fn vectorize_corpus(
    corpus: &[Document],
    tokenizer: &Tokenizer,
    vocab: &Vocabulary,
    weighting: Weighting,
) -> Vec<SparseVector> {
    corpus
        .iter()
        .map(|d| vocab.vectorize(&tokenizer.tokenize(&d.text), weighting))
        .collect()
}

/// Average number of non-zero features per instance. This is the threshold
/// used when filtering positive training instances.
pub fn average_nnz(vectors: &[SparseVector]) -> f64 {
    if vectors.is_empty() {
        return 0.0;
    }
    vectors.iter().map(|v| v.nnz() as f64).sum::<f64>() / vectors.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub labeled: usize,
    pub vocabulary: usize,
    pub average_nnz: f64,
    pub max_nnz: usize,
    pub empty_instances: usize,
}

pub fn corpus_stats(corpus: &[Document], vocab: &Vocabulary, vectors: &[SparseVector]) -> CorpusStats {
    CorpusStats {
        documents: corpus.len(),
        labeled: corpus.iter().filter(|d| d.label.is_some()).count(),
        vocabulary: vocab.len(),
        average_nnz: average_nnz(vectors),
        max_nnz: vectors.iter().map(|v| v.nnz()).max().unwrap_or(0),
        empty_instances: vectors.iter().filter(|v| v.is_empty()).count(),
    }
}

/// Postings lists (feature -> sorted instance ids) over a fixed set of vectors.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    postings: Vec<Vec<usize>>,
    n_instances: usize,
}

impl InvertedIndex {
    pub fn new(vectors: &[SparseVector], dim: usize) -> Self {
        let mut postings = vec![Vec::new(); dim];
        for (doc, v) in vectors.iter().enumerate() {
            for i in v.indices() {
                postings[i].push(doc);
            }
        }
        Self { postings, n_instances: vectors.len() }
    }

    pub fn postings(&self, feature: usize) -> &[usize] {
        self.postings.get(feature).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }
}
