//! Static word embeddings and pattern softening.
//!
//! Rows are unit-normalized at load time, so cosine similarity between stored
//! rows is a plain dot product. Softening a pattern scans only the words that
//! occur in the corpus *and* have an embedding ([`SoftCandidates`]); words
//! outside the corpus have empty posting lists and cannot change the result.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EmbeddingError, InvalidThreshold};
use crate::text::{Vocabulary, WordId};

/// Threshold used when a request does not name one.
pub const DEFAULT_ALPHA: f64 = 0.55;

/// Cosine threshold `alpha` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(alpha: f64) -> Result<Self, InvalidThreshold> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Threshold(alpha))
        } else {
            Err(InvalidThreshold(alpha))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold(DEFAULT_ALPHA)
    }
}

impl TryFrom<f64> for Threshold {
    type Error = InvalidThreshold;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Threshold::new(v)
    }
}

impl From<Threshold> for f64 {
    fn from(t: Threshold) -> f64 {
        t.0
    }
}

impl std::str::FromStr for Threshold {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
        Threshold::new(v).map_err(|e| e.to_string())
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Cosine similarity of two vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::LengthMismatch(a.len(), b.len()));
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators let the compiler vectorize the loop.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4 * 4;
    for (x, y) in a[..chunks].chunks_exact(4).zip(b[..chunks].chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in a[chunks..].iter().zip(&b[chunks..]) {
        s += x * y;
    }
    s
}

/// Result of a soft-equivalence test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    NotEquivalent,
    /// At least one word has no embedding; treated as not equivalent.
    Oov,
}

impl Equivalence {
    pub fn holds(self) -> bool {
        self == Equivalence::Equivalent
    }
}

/// Unit-normalized embedding rows keyed by their own vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: Vec<f64>,
    vocab: Vocabulary,
    zero_skipped: usize,
    duplicates_skipped: usize,
}

impl EmbeddingTable {
    /// Builds a table from `(word, vector)` pairs, normalizing each row.
    ///
    /// Duplicate words keep their first vector; zero vectors are skipped.
    pub fn from_rows<I, S>(rows: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = EmbeddingTable {
            dim: 0,
            vectors: Vec::new(),
            vocab: Vocabulary::new(),
            zero_skipped: 0,
            duplicates_skipped: 0,
        };
        for (line, (word, v)) in rows.into_iter().enumerate() {
            table.push(line + 1, word.into(), v)?;
        }
        if table.dim == 0 {
            return Err(EmbeddingError::Empty);
        }
        Ok(table)
    }

    fn push(&mut self, line: usize, word: String, mut v: Vec<f64>) -> Result<(), EmbeddingError> {
        if v.is_empty() {
            return Err(EmbeddingError::MissingValues { line });
        }
        if self.dim == 0 {
            self.dim = v.len();
        } else if v.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                line,
                expected: self.dim,
                found: v.len(),
            });
        }
        if self.vocab.id(&word).is_some() {
            self.duplicates_skipped += 1;
            return Ok(());
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            self.zero_skipped += 1;
            return Ok(());
        }
        v.iter_mut().for_each(|x| *x /= norm);
        self.vocab.insert(word);
        self.vectors.extend_from_slice(&v);
        Ok(())
    }

    /// Loads word2vec-style text (`word v1 .. vD` per line, optional `L D`
    /// header). Gzip input is detected from its magic bytes.
    pub fn load<R: Read>(reader: R) -> Result<Self, EmbeddingError> {
        let mut buffered = BufReader::new(reader);
        let gz = buffered.fill_buf()?.starts_with(&[0x1f, 0x8b]);
        if gz {
            Self::load_text(BufReader::new(MultiGzDecoder::new(buffered)))
        } else {
            Self::load_text(buffered)
        }
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        Self::load(File::open(path)?)
    }

    fn load_text<R: BufRead>(mut reader: R) -> Result<Self, EmbeddingError> {
        let mut table = EmbeddingTable {
            dim: 0,
            vectors: Vec::new(),
            vocab: Vocabulary::new(),
            zero_skipped: 0,
            duplicates_skipped: 0,
        };
        let mut buf = Vec::new();
        let mut line_no = 0;
        let mut seen_data = false;
        loop {
            buf.clear();
            if reader.read_until(b'\n', &mut buf)? == 0 {
                break;
            }
            line_no += 1;
            let line = String::from_utf8_lossy(&buf);
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if !seen_data && rest.len() == 1 && is_header(word, rest[0]) {
                seen_data = true;
                continue;
            }
            seen_data = true;
            let v = rest
                .iter()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| EmbeddingError::Parse {
                        line: line_no,
                        token: (*t).to_owned(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.push(line_no, word.to_owned(), v)?;
        }
        if table.dim == 0 {
            return Err(EmbeddingError::Empty);
        }
        if table.zero_skipped > 0 {
            log::warn!("skipped {} zero embedding vectors", table.zero_skipped);
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn zero_skipped(&self) -> usize {
        self.zero_skipped
    }

    pub fn duplicates_skipped(&self) -> usize {
        self.duplicates_skipped
    }

    pub fn row(&self, id: WordId) -> &[f64] {
        let start = id as usize * self.dim;
        &self.vectors[start..start + self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vocab.id(word).map(|id| self.row(id))
    }

    /// Cosine between two stored rows. A row compared with itself is exactly 1.
    pub fn similarity(&self, v: WordId, w: WordId) -> Option<f64> {
        if v as usize >= self.len() || w as usize >= self.len() {
            return None;
        }
        if v == w {
            return Some(1.0);
        }
        Some(dot(self.row(v), self.row(w)).clamp(-1.0, 1.0))
    }

    /// `v ≈α w`: inclusive test `cos(E(v), E(w)) >= alpha` over embedding word-ids.
    pub fn soft_equivalent(&self, v: WordId, w: WordId, alpha: Threshold) -> Equivalence {
        match self.similarity(v, w) {
            None => Equivalence::Oov,
            Some(s) if s >= alpha.get() => Equivalence::Equivalent,
            Some(_) => Equivalence::NotEquivalent,
        }
    }
}

fn is_header(a: &str, b: &str) -> bool {
    a.parse::<u64>().is_ok() && b.parse::<u64>().is_ok()
}

/// One member of a soft pattern slot: a corpus word and its cosine to the pattern word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftEntry {
    pub word: WordId,
    pub score: f64,
}

/// The softened pattern: for each pattern position, every corpus word whose
/// cosine to the pattern word reaches `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftPattern {
    pub pattern_words: Vec<String>,
    pub alpha: Threshold,
    /// One slot per pattern word, each sorted by corpus word-id.
    pub entries: Vec<Vec<SoftEntry>>,
    /// Pattern words with no embedding, in pattern order.
    pub oov_words: Vec<String>,
}

impl SoftPattern {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when no pattern word has an embedding.
    pub fn is_all_oov(&self) -> bool {
        !self.pattern_words.is_empty() && self.oov_words.len() == self.pattern_words.len()
    }

    /// Score of `word` in slot `k`, if it passed the threshold.
    pub fn score(&self, k: usize, word: WordId) -> Option<f64> {
        let slot = &self.entries[k];
        slot.binary_search_by_key(&word, |e| e.word)
            .ok()
            .map(|i| slot[i].score)
    }

    pub fn words(&self, k: usize) -> impl Iterator<Item = WordId> + '_ {
        self.entries[k].iter().map(|e| e.word)
    }
}

const PAR_CHUNK_ROWS: usize = 16 * 1024;

/// Corpus words that have embeddings, with their rows packed contiguously.
#[derive(Debug, Clone)]
pub struct SoftCandidates {
    dim: usize,
    corpus_ids: Vec<WordId>,
    embedding_ids: Vec<WordId>,
    matrix: Vec<f64>,
}

impl SoftCandidates {
    pub fn new(embeddings: &EmbeddingTable, corpus_vocab: &Vocabulary) -> Self {
        let dim = embeddings.dim();
        let mut corpus_ids = Vec::new();
        let mut embedding_ids = Vec::new();
        let mut matrix = Vec::new();
        for (cid, word) in corpus_vocab.words().iter().enumerate() {
            if let Some(eid) = embeddings.vocab().id(word) {
                corpus_ids.push(cid as WordId);
                embedding_ids.push(eid);
                matrix.extend_from_slice(embeddings.row(eid));
            }
        }
        SoftCandidates {
            dim,
            corpus_ids,
            embedding_ids,
            matrix,
        }
    }

    pub fn len(&self) -> usize {
        self.corpus_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus_ids.is_empty()
    }

    /// Softens `pattern` against these candidates.
    ///
    /// Pattern words without an embedding get an empty slot and are listed in
    /// `oov_words`. The candidate matrix is streamed once for all pattern words.
    pub fn soften<S: AsRef<str>>(
        &self,
        pattern: &[S],
        alpha: Threshold,
        embeddings: &EmbeddingTable,
    ) -> SoftPattern {
        let mut oov_words = Vec::new();
        let mut queries = Vec::new();
        for (k, p) in pattern.iter().enumerate() {
            let p = p.as_ref();
            match embeddings.vocab().id(p) {
                Some(eid) => queries.push(Query {
                    slot: k,
                    vector: embeddings.row(eid),
                    embedding_id: eid,
                }),
                None => oov_words.push(p.to_owned()),
            }
        }
        let mut entries = vec![Vec::new(); pattern.len()];
        for (q, found) in queries.iter().zip(self.scan(&queries, alpha.get())) {
            entries[q.slot] = found;
        }
        SoftPattern {
            pattern_words: pattern.iter().map(|p| p.as_ref().to_owned()).collect(),
            alpha,
            entries,
            oov_words,
        }
    }

    fn scan(&self, queries: &[Query<'_>], alpha: f64) -> Vec<Vec<SoftEntry>> {
        if queries.is_empty() {
            return Vec::new();
        }
        let dim = self.dim;
        let scan_chunk = |chunk_idx: usize, rows: &[f64]| {
            let base = chunk_idx * PAR_CHUNK_ROWS;
            let mut out = vec![Vec::new(); queries.len()];
            for (j, row) in rows.chunks_exact(dim).enumerate() {
                let c = base + j;
                for (q, found) in queries.iter().zip(out.iter_mut()) {
                    let score = if self.embedding_ids[c] == q.embedding_id {
                        1.0
                    } else {
                        dot(q.vector, row).clamp(-1.0, 1.0)
                    };
                    if score >= alpha {
                        found.push(SoftEntry {
                            word: self.corpus_ids[c],
                            score,
                        });
                    }
                }
            }
            out
        };
        if self.len() <= PAR_CHUNK_ROWS {
            return scan_chunk(0, &self.matrix);
        }
        let parts: Vec<Vec<Vec<SoftEntry>>> = self
            .matrix
            .par_chunks(PAR_CHUNK_ROWS * dim)
            .enumerate()
            .map(|(i, rows)| scan_chunk(i, rows))
            .collect();
        (0..queries.len())
            .map(|qi| parts.iter().flat_map(|p| p[qi].iter().copied()).collect())
            .collect()
    }
}

struct Query<'a> {
    slot: usize,
    vector: &'a [f64],
    embedding_id: WordId,
}

/// Step 1 in one call: soften `pattern` over `corpus_vocab ∩ embeddings`.
pub fn soften_pattern<S: AsRef<str>>(
    pattern: &[S],
    alpha: Threshold,
    embeddings: &EmbeddingTable,
    corpus_vocab: &Vocabulary,
) -> SoftPattern {
    SoftCandidates::new(embeddings, corpus_vocab).soften(pattern, alpha, embeddings)
}
