//! Synthetic Zipf-distributed corpora and random embeddings for benchmarking.

use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;
use rand_distr::{Distribution, StandardNormal, Zipf};

use crate::embeddings::EmbeddingTable;
use crate::text::{TokenizedCorpus, Vocabulary, WordId};

#[derive(Debug, Clone, Copy)]
pub struct SyntheticSpec {
    pub tokens: usize,
    pub vocab_size: usize,
    pub doc_len: usize,
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            tokens: 1_000_000,
            vocab_size: 10_000,
            doc_len: 1_000,
            zipf_exponent: 1.0,
            seed: 0,
        }
    }
}

/// Word string for frequency rank `rank` (0 = most frequent).
pub fn word(rank: usize) -> String {
    format!("w{rank}")
}

/// Corpus whose word-id equals frequency rank. The vocabulary covers all
/// `vocab_size` words whether or not each one is sampled.
pub fn zipf_corpus(spec: &SyntheticSpec) -> (TokenizedCorpus, Vocabulary) {
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let zipf = Zipf::new(spec.vocab_size as u64, spec.zipf_exponent).expect("valid zipf parameters");
    let tokens: Vec<WordId> = (0..spec.tokens)
        .map(|_| zipf.sample(&mut rng) as WordId - 1)
        .collect();
    let doc_len = spec.doc_len.max(1);
    let doc_offsets = (0..spec.tokens).step_by(doc_len).map(|o| o as u64).collect();
    let vocab = Vocabulary::from_words((0..spec.vocab_size).map(word)).expect("distinct words");
    let corpus = TokenizedCorpus {
        tokens,
        doc_offsets,
        source_name: format!("zipf-{}-{}", spec.tokens, spec.vocab_size),
    };
    (corpus, vocab)
}

/// Gaussian random directions for every word in `vocab`.
pub fn random_embeddings(vocab: &Vocabulary, dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = StdRng::seed_from_u64(seed);
    let rows = vocab.words().iter().map(|w| {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if v.iter().all(|x| *x == 0.0) {
            v[0] = 1.0;
        }
        (w.clone(), v)
    });
    EmbeddingTable::from_rows(rows).expect("non-empty vocabulary")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_shape() {
        let spec = SyntheticSpec { tokens: 10_500, vocab_size: 100, doc_len: 1000, ..Default::default() };
        let (c, v) = zipf_corpus(&spec);
        assert_eq!(c.len(), 10_500);
        assert_eq!(c.doc_count(), 11);
        assert_eq!(v.len(), 100);
        c.validate(v.len()).unwrap();
        let zeros = c.tokens.iter().filter(|&&t| t == 0).count();
        let tens = c.tokens.iter().filter(|&&t| t == 10).count();
        assert!(zeros > 5 * tens);
        let e = random_embeddings(&v, 8, 1);
        assert_eq!((e.len(), e.dim()), (100, 8));
    }
}
