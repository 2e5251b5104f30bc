//! Document ranking with soft term statistics.
//!
//! A pattern's soft term frequency in a document is the sum, over its soft
//! occurrences there, of the product of the per-word cosine scores. Soft
//! document frequency counts documents with at least one soft occurrence.
//! Both feed the Lucene BM25 formula unchanged.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::embeddings::Threshold;
use crate::engine::Engine;
use crate::error::Bm25Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self, Bm25Error> {
        if !(k1.is_finite() && k1 >= 0.0) {
            return Err(Bm25Error::InvalidK1(k1));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Bm25Error::InvalidB(b));
        }
        Ok(Bm25Params { k1, b })
    }
}

/// Lucene idf: `ln(1 + (N − df + 0.5) / (df + 0.5))`.
pub fn idf(doc_count: usize, df: usize) -> f64 {
    let (n, df) = (doc_count as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// Saturated, length-normalized term weight for one (pattern, document) pair.
pub fn term_weight(idf: f64, tf: f64, doc_len: f64, avg_doc_len: f64, params: Bm25Params) -> f64 {
    if tf == 0.0 {
        return 0.0;
    }
    let len_ratio = if avg_doc_len > 0.0 { doc_len / avg_doc_len } else { 1.0 };
    let norm = params.k1 * (1.0 - params.b + params.b * len_ratio);
    idf * tf * (params.k1 + 1.0) / (tf + norm)
}

/// Soft statistics of one pattern over the whole corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternStats {
    /// Soft tf per document; documents without an occurrence are absent.
    pub tf: BTreeMap<usize, f64>,
    pub oov_words: Vec<String>,
    /// Candidate count of the underlying match.
    pub candidates: u64,
}

impl PatternStats {
    /// Documents with at least one soft occurrence.
    pub fn df(&self) -> usize {
        self.tf.len()
    }

    pub fn tf(&self, doc: usize) -> f64 {
        self.tf.get(&doc).copied().unwrap_or(0.0)
    }
}

/// Collects soft tf for every document from one pass over the match set.
pub fn pattern_stats<S: AsRef<str>>(engine: &Engine, pattern: &[S], alpha: Threshold) -> PatternStats {
    let outcome = engine.match_pattern(pattern, alpha);
    let corpus = engine.corpus();
    let mut tf = BTreeMap::new();
    for &start in &outcome.matches.starts {
        let weight: f64 = (0..pattern.len())
            .map(|k| {
                let word = corpus.tokens[start as usize + k];
                outcome.pattern.score(k, word).unwrap_or(0.0)
            })
            .product();
        *tf.entry(corpus.doc_of(start)).or_insert(0.0) += weight;
    }
    PatternStats {
        tf,
        oov_words: outcome.pattern.oov_words,
        candidates: outcome.matches.candidates,
    }
}

pub fn soft_tf<S: AsRef<str>>(engine: &Engine, doc: usize, pattern: &[S], alpha: Threshold) -> f64 {
    pattern_stats(engine, pattern, alpha).tf(doc)
}

pub fn soft_idf<S: AsRef<str>>(engine: &Engine, pattern: &[S], alpha: Threshold) -> f64 {
    idf(engine.corpus().doc_count(), pattern_stats(engine, pattern, alpha).df())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedDoc {
    pub doc_id: usize,
    pub score: f64,
}

/// Ranking of every document plus the query words that had no embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub results: Vec<RankedDoc>,
    pub oov_words: Vec<String>,
}

/// Scores every document against a multi-pattern query.
///
/// Patterns are raw strings, normalized with the engine's normalizer. Results
/// are sorted by descending score, ties by ascending document id.
pub fn score_documents<S: AsRef<str>>(
    engine: &Engine,
    patterns: &[S],
    alpha: Threshold,
    params: Bm25Params,
) -> Result<Ranking, Bm25Error> {
    if patterns.is_empty() {
        return Err(Bm25Error::NoPatterns);
    }
    let parsed: Vec<Vec<String>> = patterns.iter().map(|p| engine.parse_query(p.as_ref())).collect();
    if let Some(i) = parsed.iter().position(Vec::is_empty) {
        return Err(Bm25Error::EmptyPattern(i));
    }
    let corpus = engine.corpus();
    let doc_count = corpus.doc_count();
    let doc_lens = corpus.doc_lengths();
    let avg_doc_len = if doc_count > 0 {
        corpus.len() as f64 / doc_count as f64
    } else {
        0.0
    };

    let mut scores = vec![0.0f64; doc_count];
    let mut oov_words: Vec<String> = Vec::new();
    for pattern in &parsed {
        let stats = pattern_stats(engine, pattern, alpha);
        let w = idf(doc_count, stats.df());
        for (&doc, &tf) in &stats.tf {
            scores[doc] += term_weight(w, tf, doc_lens[doc] as f64, avg_doc_len, params);
        }
        for word in stats.oov_words {
            if !oov_words.contains(&word) {
                oov_words.push(word);
            }
        }
    }

    let mut results: Vec<RankedDoc> = scores
        .into_iter()
        .enumerate()
        .map(|(doc_id, score)| RankedDoc { doc_id, score })
        .collect();
    results.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc_id.cmp(&b.doc_id)));
    Ok(Ranking { results, oov_words })
}
