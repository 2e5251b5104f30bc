#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use softmatcha_core::text::tokenize_documents;
use softmatcha_core::{EmbeddingTable, Engine, Normalizer, TokenizedCorpus, Vocabulary};

pub const TOY_SENTENCE: &str = "when a jazz pianist plays funk with a blues singer";
/// Twelve-token variant whose soft postings cover every position class.
pub const TOY_EXTENDED: &str = "when a jazz pianist plays funk with a blues singer this jazz";

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/toy")
}

pub fn toy_embeddings() -> EmbeddingTable {
    EmbeddingTable::load_path(data_dir().join("embeddings.txt")).unwrap()
}

pub fn toy_engine(docs: &[&str]) -> Engine {
    let norm = Normalizer::default();
    let (c, v) = tokenize_documents(docs, &norm);
    Engine::new(c, v, toy_embeddings(), norm).unwrap()
}

/// A random matching problem: corpus, vocabulary, embeddings and a pattern.
pub struct Instance {
    pub corpus: TokenizedCorpus,
    pub vocab: Vocabulary,
    pub embeddings: EmbeddingTable,
    pub pattern: Vec<String>,
    pub all_embedded: bool,
}

impl Instance {
    pub fn engine(&self) -> Engine {
        Engine::new(
            self.corpus.clone(),
            self.vocab.clone(),
            self.embeddings.clone(),
            Normalizer::pretokenized(),
        )
        .unwrap()
    }

    pub fn pattern_refs(&self) -> Vec<&str> {
        self.pattern.iter().map(String::as_str).collect()
    }
}

fn random_corpus(rng: &mut ChaCha8Rng, max_n: usize, l: usize) -> (TokenizedCorpus, Vocabulary) {
    let n = rng.gen_range(1..=max_n);
    // Skewed token distribution so that repeated phrases occur.
    let skew: f64 = rng.gen_range(0.0..2.0);
    let tokens: Vec<u32> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            ((u.powf(1.0 + skew)) * l as f64) as u32
        })
        .map(|t| t.min(l as u32 - 1))
        .collect();
    let docs = rng.gen_range(1..=(n / 3).clamp(1, 50));
    let mut cuts: Vec<u64> = (1..docs).map(|_| rng.gen_range(0..n as u64)).collect();
    cuts.push(0);
    cuts.sort_unstable();
    let vocab = Vocabulary::from_words((0..l).map(|i| format!("v{i}"))).unwrap();
    let corpus = TokenizedCorpus {
        tokens,
        doc_offsets: cuts,
        source_name: "random".into(),
    };
    (corpus, vocab)
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = rng.gen_range(2..=200);
    let d = *[4usize, 8, 16].choose(&mut rng).unwrap();
    let (corpus, vocab) = random_corpus(&mut rng, 10_000, l);
    // Some corpus words lack embeddings; a few embedding words are not in the corpus.
    let mut rows = Vec::new();
    for w in vocab.words() {
        if rng.gen_bool(0.95) {
            rows.push((w.clone(), gaussian(&mut rng, d)));
        }
    }
    for i in 0..rng.gen_range(0..10) {
        rows.push((format!("x{i}"), gaussian(&mut rng, d)));
    }
    if rows.is_empty() {
        rows.push(("x0".to_string(), gaussian(&mut rng, d)));
    }
    let embeddings = EmbeddingTable::from_rows(rows).unwrap();

    let n = rng.gen_range(1..=4);
    let pattern: Vec<String> = if rng.gen_bool(0.5) && corpus.len() >= n {
        let start = rng.gen_range(0..=corpus.len() - n);
        (0..n).map(|k| vocab.words()[corpus.tokens[start + k] as usize].clone()).collect()
    } else {
        let emb_words = embeddings.vocab().words();
        (0..n)
            .map(|_| {
                if rng.gen_bool(0.9) {
                    emb_words.choose(&mut rng).unwrap().clone()
                } else {
                    vocab.words().choose(&mut rng).unwrap().clone()
                }
            })
            .collect()
    };
    let all_embedded = pattern.iter().all(|p| embeddings.get(p).is_some());
    Instance {
        corpus,
        vocab,
        embeddings,
        pattern,
        all_embedded,
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

/// Small multi-document corpus with pairwise-distinct random embeddings, for BM25.
pub fn random_bm25_instance(seed: u64) -> (Engine, Vec<Vec<String>>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = rng.gen_range(2..=12);
    let words: Vec<String> = (0..l).map(|i| format!("t{i}")).collect();
    let doc_count = rng.gen_range(1..=20);
    let docs: Vec<Vec<String>> = (0..doc_count)
        .map(|_| {
            let len = rng.gen_range(0..=30);
            (0..len).map(|_| words.choose(&mut rng).unwrap().clone()).collect()
        })
        .collect();
    let joined: Vec<String> = docs.iter().map(|d| d.join(" ")).collect();
    let norm = Normalizer::default();
    let (c, v) = tokenize_documents(&joined, &norm);
    let d = rng.gen_range(4..=16);
    let rows: Vec<(String, Vec<f64>)> = words.iter().map(|w| (w.clone(), gaussian(&mut rng, d))).collect();
    let engine = Engine::new(c, v, EmbeddingTable::from_rows(rows).unwrap(), norm).unwrap();

    let mut patterns = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let n = rng.gen_range(1..=3);
        let candidates: Vec<&Vec<String>> = docs.iter().filter(|d| d.len() >= n).collect();
        let p: Vec<String> = match candidates.choose(&mut rng) {
            Some(doc) if rng.gen_bool(0.8) => {
                let s = rng.gen_range(0..=doc.len() - n);
                doc[s..s + n].to_vec()
            }
            _ => (0..n).map(|_| words.choose(&mut rng).unwrap().clone()).collect(),
        };
        patterns.push(p.join(" "));
    }
    (engine, docs, patterns)
}
