//! Brute-force reference implementations.
//!
//! Nothing here touches the inverted index, the candidate matrix or the BM25
//! module: every window is tested word by word with a freshly computed cosine,
//! and BM25 is evaluated from raw phrase counts.

use thiserror::Error;

use crate::bm25::Bm25Params;
use crate::embeddings::EmbeddingTable;
use crate::text::{TokenizedCorpus, Vocabulary};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("pattern {0} is empty")]
    EmptyPattern(usize),
}

fn fresh_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    ab / (aa.sqrt() * bb.sqrt())
}

fn softly_equal(embeddings: &EmbeddingTable, text_word: &str, pattern_word: &str, alpha: f64) -> bool {
    let (Some(a), Some(b)) = (embeddings.get(text_word), embeddings.get(pattern_word)) else {
        return false;
    };
    // cos(e, e) = 1 by definition; do not let rounding decide it.
    if text_word == pattern_word {
        return true;
    }
    fresh_cosine(a, b) >= alpha
}

fn documents(corpus: &TokenizedCorpus) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in 0..corpus.doc_offsets.len() {
        let start = corpus.doc_offsets[d] as usize;
        let end = if d + 1 < corpus.doc_offsets.len() {
            corpus.doc_offsets[d + 1] as usize
        } else {
            corpus.tokens.len()
        };
        out.push((start, end));
    }
    out
}

/// Every start position `i` whose window `t_i .. t_{i+n-1}` lies in one document
/// and softly matches the pattern word for word.
pub fn brute_force_match(
    corpus: &TokenizedCorpus,
    vocab: &Vocabulary,
    embeddings: &EmbeddingTable,
    pattern: &[&str],
    alpha: f64,
) -> Vec<u64> {
    let n = pattern.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for (start, end) in documents(corpus) {
        if end - start < n {
            continue;
        }
        for i in start..=end - n {
            let all = (0..n).all(|k| {
                let word = vocab.words()[corpus.tokens[i + k] as usize].as_str();
                softly_equal(embeddings, word, pattern[k], alpha)
            });
            if all {
                out.push(i as u64);
            }
        }
    }
    out
}

/// Exact (string-equality) phrase matches, respecting document boundaries.
pub fn exact_match(corpus: &TokenizedCorpus, vocab: &Vocabulary, pattern: &[&str]) -> Vec<u64> {
    let n = pattern.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for (start, end) in documents(corpus) {
        if end - start < n {
            continue;
        }
        for i in start..=end - n {
            if (0..n).all(|k| vocab.words()[corpus.tokens[i + k] as usize] == pattern[k]) {
                out.push(i as u64);
            }
        }
    }
    out
}

/// Textbook BM25 over exact (possibly overlapping) phrase counts.
///
/// `docs` are token lists, `patterns` token lists; returns one score per document.
pub fn classical_bm25(
    docs: &[Vec<String>],
    patterns: &[Vec<String>],
    params: Bm25Params,
) -> Result<Vec<f64>, OracleError> {
    if let Some(i) = patterns.iter().position(Vec::is_empty) {
        return Err(OracleError::EmptyPattern(i));
    }
    let n_docs = docs.len() as f64;
    let total_len: usize = docs.iter().map(Vec::len).sum();
    let avgdl = if docs.is_empty() { 0.0 } else { total_len as f64 / n_docs };
    let mut scores = vec![0.0; docs.len()];
    for pattern in patterns {
        let counts: Vec<usize> = docs
            .iter()
            .map(|doc| {
                if doc.len() < pattern.len() {
                    return 0;
                }
                doc.windows(pattern.len()).filter(|w| *w == pattern.as_slice()).count()
            })
            .collect();
        let df = counts.iter().filter(|&&c| c > 0).count() as f64;
        // 1 + (N - df + 0.5) / (df + 0.5) == (N + 1) / (df + 0.5)
        let idf = ((n_docs + 1.0) / (df + 0.5)).ln();
        for (d, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let tf = c as f64;
            let dl = docs[d].len() as f64;
            let ratio = if avgdl == 0.0 { 1.0 } else { dl / avgdl };
            let denom = tf + params.k1 - params.k1 * params.b + params.k1 * params.b * ratio;
            scores[d] += idf * (tf * (params.k1 + 1.0)) / denom;
        }
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{tokenize_documents, Normalizer};

    #[test]
    fn exact_and_short_documents() {
        let (c, v) = tokenize_documents(&["a b a b", "a", "b a"], &Normalizer::default());
        assert_eq!(exact_match(&c, &v, &["a", "b"]), [0, 2]);
        assert_eq!(exact_match(&c, &v, &["b", "a"]), [1, 5]);
        let t = EmbeddingTable::from_rows([("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])]).unwrap();
        assert!(brute_force_match(&c, &v, &t, &["a", "b", "a", "b", "a"], 0.5).is_empty());
        // α just above the cross cosine (0) behaves exactly
        assert_eq!(brute_force_match(&c, &v, &t, &["a", "b"], 0.01), [0, 2]);
        assert_eq!(brute_force_match(&c, &v, &t, &["a", "zz"], 0.01), Vec::<u64>::new());
    }

    #[test]
    fn classical_bm25_values() {
        let p = Bm25Params::default();
        let docs = vec![vec!["a".to_string(), "b".to_string()]];
        let s = classical_bm25(&docs, &[vec!["a".into()]], p).unwrap();
        assert!((s[0] - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        // df == doc_count
        let docs: Vec<Vec<String>> = (0..4).map(|_| vec!["a".to_string()]).collect();
        let s = classical_bm25(&docs, &[vec!["a".into()]], p).unwrap();
        assert!((s[0] - (1.0 + 0.5 / 4.5f64).ln()).abs() < 1e-12);
        assert_eq!(
            classical_bm25(&docs, &[vec![]], p),
            Err(OracleError::EmptyPattern(0))
        );
    }
}
