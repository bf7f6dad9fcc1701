//! Word-embedding tables: text and word2vec-style binary readers plus
//! cosine-similarity neighborhoods for lexicon expansion.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt};
use thiserror::Error;

/// On-disk layout of an embedding file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    /// Header `vocab dim`, then `token v1 .. vdim` per line.
    Text,
    /// Same header line, then `token ' '` followed by dim little-endian f32s.
    Binary,
}

/// Vocabulary of unit-normalized vectors; phrases join tokens with '_'.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub dim: usize,
    vocab: HashMap<String, Vec<f32>>,
    pub phrase_joiner: char,
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vector for {token:?} has {got} dims, expected {expected}")]
    DimensionMismatch {
        token: String,
        expected: usize,
        got: usize,
    },
    #[error("zero vector for token {0:?}")]
    ZeroVector(String),
    #[error("truncated or malformed embedding file: {0}")]
    TruncatedFile(String),
    #[error("term not in vocabulary: {0:?}")]
    UnknownTerm(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn normalize(token: &str, mut v: Vec<f32>) -> Result<Vec<f32>, EmbeddingError> {
    let norm: f32 = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return Err(EmbeddingError::ZeroVector(token.to_string()));
    }
    for x in &mut v {
        *x /= norm;
    }
    Ok(v)
}

fn parse_header(line: &str) -> Result<(usize, usize), EmbeddingError> {
    let mut it = line.split_whitespace();
    let vocab = it
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| EmbeddingError::TruncatedFile("missing vocab count".into()))?;
    let dim = it
        .next()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| EmbeddingError::TruncatedFile("missing dimension".into()))?;
    Ok((vocab, dim))
}

impl EmbeddingTable {
    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.contains_key(token)
    }

    /// Build a table from (token, vector) pairs; vectors are normalized here.
    pub fn from_pairs(
        dim: usize,
        pairs: impl IntoIterator<Item = (String, Vec<f32>)>,
    ) -> Result<Self, EmbeddingError> {
        let mut vocab = HashMap::new();
        for (token, v) in pairs {
            if v.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    token,
                    expected: dim,
                    got: v.len(),
                });
            }
            let v = normalize(&token, v)?;
            vocab.insert(token, v);
        }
        Ok(EmbeddingTable {
            dim,
            vocab,
            phrase_joiner: '_',
        })
    }

    fn read_text(reader: impl BufRead) -> Result<Self, EmbeddingError> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| EmbeddingError::TruncatedFile("empty file".into()))??;
        let (vocab_size, dim) = parse_header(&header)?;
        let mut pairs = Vec::with_capacity(vocab_size);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let token = it
                .next()
                .ok_or_else(|| EmbeddingError::TruncatedFile("blank vector line".into()))?
                .to_string();
            let values: Vec<f32> = it
                .map(|s| {
                    s.parse::<f32>().map_err(|_| {
                        EmbeddingError::TruncatedFile(format!("bad float in line for {token:?}"))
                    })
                })
                .collect::<Result<_, _>>()?;
            if values.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    token,
                    expected: dim,
                    got: values.len(),
                });
            }
            pairs.push((token, values));
        }
        if pairs.len() != vocab_size {
            return Err(EmbeddingError::TruncatedFile(format!(
                "header says {vocab_size} tokens, file has {}",
                pairs.len()
            )));
        }
        Self::from_pairs(dim, pairs)
    }

    fn read_binary(mut reader: impl BufRead) -> Result<Self, EmbeddingError> {
        let mut header = Vec::new();
        reader.read_until(b'\n', &mut header)?;
        let header = String::from_utf8(header)
            .map_err(|_| EmbeddingError::TruncatedFile("non-UTF-8 header".into()))?;
        let (vocab_size, dim) = parse_header(&header)?;
        let mut pairs = Vec::with_capacity(vocab_size);
        for _ in 0..vocab_size {
            let mut token_bytes = Vec::new();
            reader.read_until(b' ', &mut token_bytes)?;
            if token_bytes.is_empty() {
                return Err(EmbeddingError::TruncatedFile("unexpected end of file".into()));
            }
            if token_bytes.last() == Some(&b' ') {
                token_bytes.pop();
            }
            // word2vec writers put a '\n' after each vector; it lands in
            // front of the next token.
            while token_bytes.first() == Some(&b'\n') {
                token_bytes.remove(0);
            }
            let token = String::from_utf8(token_bytes)
                .map_err(|_| EmbeddingError::TruncatedFile("non-UTF-8 token".into()))?;
            let mut values = vec![0f32; dim];
            for v in values.iter_mut() {
                *v = reader
                    .read_f32::<LittleEndian>()
                    .map_err(|_| EmbeddingError::TruncatedFile(format!("vector for {token:?}")))?;
            }
            pairs.push((token, values));
        }
        Self::from_pairs(dim, pairs)
    }

    /// Look up a term's unit vector. Multi-word terms try the joined phrase
    /// token first, then fall back to the normalized mean of known
    /// constituents; None when nothing is known.
    pub fn vector_for(&self, term: &str) -> Option<Vec<f32>> {
        let term = term.trim().to_lowercase();
        if let Some(v) = self.vocab.get(&term) {
            return Some(v.clone());
        }
        let words: Vec<&str> = term.split_whitespace().collect();
        if words.len() > 1 {
            let joined = words.join(&self.phrase_joiner.to_string());
            if let Some(v) = self.vocab.get(&joined) {
                return Some(v.clone());
            }
            let known: Vec<&Vec<f32>> =
                words.iter().filter_map(|w| self.vocab.get(*w)).collect();
            if known.is_empty() {
                return None;
            }
            let mut mean = vec![0f32; self.dim];
            for v in &known {
                for (m, x) in mean.iter_mut().zip(v.iter()) {
                    *m += x;
                }
            }
            for m in &mut mean {
                *m /= known.len() as f32;
            }
            return normalize(&term, mean).ok();
        }
        None
    }

    /// Tokens with cosine similarity >= `sim_threshold` to `term`, excluding
    /// the term itself, sorted by similarity descending, capped at `k_max`.
    pub fn neighbors(
        &self,
        term: &str,
        sim_threshold: f64,
        k_max: usize,
    ) -> Result<Vec<(String, f64)>, EmbeddingError> {
        let term_norm = term.trim().to_lowercase();
        let query = self
            .vector_for(&term_norm)
            .ok_or_else(|| EmbeddingError::UnknownTerm(term.to_string()))?;
        let joined = term_norm.replace(' ', &self.phrase_joiner.to_string());
        let mut hits: Vec<(String, f64)> = self
            .vocab
            .iter()
            .filter(|(tok, _)| **tok != term_norm && **tok != joined)
            .map(|(tok, v)| {
                let dot: f64 = v.iter().zip(query.iter()).map(|(a, b)| (*a as f64) * (*b as f64)).sum();
                (tok.clone(), dot)
            })
            .filter(|(_, sim)| *sim >= sim_threshold)
            .collect();
        hits.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        hits.truncate(k_max);
        Ok(hits)
    }
}

/// Load an embedding table; vectors are unit-normalized so cosine reduces to
/// a dot product.
pub fn load_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingTable, EmbeddingError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    match format {
        EmbeddingFormat::Text => EmbeddingTable::read_text(reader),
        EmbeddingFormat::Binary => EmbeddingTable::read_binary(reader),
    }
}

/// Load, sniffing the format: a parseable all-text second line means text.
pub fn load_embeddings_auto(path: &Path) -> Result<EmbeddingTable, EmbeddingError> {
    let mut head = [0u8; 4096];
    let n = {
        let mut f = std::fs::File::open(path)?;
        let mut read = 0;
        loop {
            let r = f.read(&mut head[read..])?;
            if r == 0 {
                break;
            }
            read += r;
            if read == head.len() {
                break;
            }
        }
        read
    };
    let looks_text = std::str::from_utf8(&head[..n]).is_ok();
    load_embeddings(
        path,
        if looks_text {
            EmbeddingFormat::Text
        } else {
            EmbeddingFormat::Binary
        },
    )
}
