//! Query-level façade: normalize, soften, match, and render keyword-in-context rows.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingTable, SoftCandidates, SoftPattern, Threshold};
use crate::error::{CorpusError, SearchError};
use crate::format::IndexFile;
use crate::index::{match_soft_pattern, InvertedIndex, MatchSet};
use crate::text::{Normalizer, TokenizedCorpus, Vocabulary};

pub const DEFAULT_CONTEXT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRequest {
    pub query: String,
    pub alpha: Threshold,
    /// Maximum number of matches returned; `None` returns all.
    pub limit: Option<usize>,
    /// Number of leading matches to skip (pagination).
    #[serde(default)]
    pub offset: usize,
    pub context_window: usize,
}

impl SearchRequest {
    pub fn new(query: impl Into<String>, alpha: Threshold) -> Self {
        SearchRequest {
            query: query.into(),
            alpha,
            limit: None,
            offset: 0,
            context_window: DEFAULT_CONTEXT,
        }
    }

    pub fn limit(mut self, limit: usize) -> Self {
        self.limit = Some(limit);
        self
    }

    pub fn offset(mut self, offset: usize) -> Self {
        self.offset = offset;
        self
    }

    pub fn context(mut self, window: usize) -> Self {
        self.context_window = window;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedToken {
    pub token: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub doc_id: usize,
    /// Token offset of the first matched token within its document.
    pub start_offset: usize,
    pub tokens: Vec<MatchedToken>,
    /// Smallest per-token score in the window.
    pub min_score: f64,
    pub left: String,
    pub right: String,
}

impl Match {
    pub fn text(&self) -> String {
        self.tokens.iter().map(|t| t.token.as_str()).collect::<Vec<_>>().join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Pattern length after normalization.
    pub n: usize,
    /// Candidate positions `K = Σ_k |Ĩ_k|`.
    pub k: u64,
    pub soften_ms: f64,
    pub match_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub matches: Vec<Match>,
    /// `|M|`, independent of `limit` and `offset`.
    pub total_hits: usize,
    pub oov_words: Vec<String>,
    pub stats: SearchStats,
}

/// Result of running the matcher without rendering.
#[derive(Debug, Clone)]
pub struct MatchOutcome {
    pub pattern: SoftPattern,
    pub matches: MatchSet,
    pub soften_time: Duration,
    pub match_time: Duration,
}

/// Left context, matched tokens and right context, each space-joined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kwic {
    pub left: String,
    pub matched: String,
    pub right: String,
}

/// Immutable search state: corpus, vocabulary, index and embeddings.
///
/// All methods take `&self`; an `Engine` can be shared across threads.
#[derive(Debug)]
pub struct Engine {
    corpus: TokenizedCorpus,
    vocab: Vocabulary,
    index: InvertedIndex,
    embeddings: EmbeddingTable,
    normalizer: Normalizer,
    candidates: SoftCandidates,
}

impl Engine {
    pub fn new(
        corpus: TokenizedCorpus,
        vocab: Vocabulary,
        embeddings: EmbeddingTable,
        normalizer: Normalizer,
    ) -> Result<Self, CorpusError> {
        corpus.validate(vocab.len())?;
        let index = InvertedIndex::build(&corpus, vocab.len());
        Ok(Self::assemble(corpus, vocab, index, embeddings, normalizer))
    }

    pub fn from_index_file(file: IndexFile, embeddings: EmbeddingTable) -> Self {
        let corpus = file.corpus();
        Self::assemble(corpus, file.vocab, file.index, embeddings, file.normalizer)
    }

    fn assemble(
        corpus: TokenizedCorpus,
        vocab: Vocabulary,
        index: InvertedIndex,
        embeddings: EmbeddingTable,
        normalizer: Normalizer,
    ) -> Self {
        let candidates = SoftCandidates::new(&embeddings, &vocab);
        Engine {
            corpus,
            vocab,
            index,
            embeddings,
            normalizer,
            candidates,
        }
    }

    pub fn corpus(&self) -> &TokenizedCorpus {
        &self.corpus
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn embeddings(&self) -> &EmbeddingTable {
        &self.embeddings
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    /// Corpus words that also have an embedding.
    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    /// Normalizes and tokenizes a query with the corpus normalizer.
    pub fn parse_query(&self, query: &str) -> Vec<String> {
        self.normalizer.tokenize(query)
    }

    pub fn soften<S: AsRef<str>>(&self, pattern: &[S], alpha: Threshold) -> SoftPattern {
        self.candidates.soften(pattern, alpha, &self.embeddings)
    }

    /// Runs all three matching steps for an already tokenized pattern.
    pub fn match_pattern<S: AsRef<str>>(&self, pattern: &[S], alpha: Threshold) -> MatchOutcome {
        let t0 = Instant::now();
        let soft = self.soften(pattern, alpha);
        let t1 = Instant::now();
        let matches = match_soft_pattern(&soft, &self.index, &self.corpus.doc_offsets);
        let t2 = Instant::now();
        MatchOutcome {
            pattern: soft,
            matches,
            soften_time: t1 - t0,
            match_time: t2 - t1,
        }
    }

    pub fn search(&self, req: &SearchRequest) -> Result<SearchResponse, SearchError> {
        if req.limit == Some(0) {
            return Err(SearchError::InvalidLimit);
        }
        let pattern = self.parse_query(&req.query);
        if pattern.is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        let outcome = self.match_pattern(&pattern, req.alpha);
        let total_hits = outcome.matches.len();
        let page = outcome
            .matches
            .starts
            .iter()
            .skip(req.offset)
            .take(req.limit.unwrap_or(usize::MAX));
        let matches = page
            .map(|&start| self.render_match(&outcome.pattern, start, req.context_window))
            .collect();
        Ok(SearchResponse {
            matches,
            total_hits,
            oov_words: outcome.pattern.oov_words.clone(),
            stats: SearchStats {
                n: pattern.len(),
                k: outcome.matches.candidates,
                soften_ms: outcome.soften_time.as_secs_f64() * 1e3,
                match_ms: outcome.match_time.as_secs_f64() * 1e3,
            },
        })
    }

    fn render_match(&self, pattern: &SoftPattern, start: u64, window: usize) -> Match {
        let n = pattern.len();
        let doc_id = self.corpus.doc_of(start);
        let doc_start = self.corpus.doc_offsets[doc_id] as usize;
        let tokens: Vec<MatchedToken> = (0..n)
            .map(|k| {
                let word = self.corpus.tokens[start as usize + k];
                MatchedToken {
                    token: self.vocab.word(word).unwrap_or_default().to_owned(),
                    score: pattern.score(k, word).unwrap_or(f64::NAN),
                }
            })
            .collect();
        let min_score = tokens.iter().map(|t| t.score).fold(f64::INFINITY, f64::min);
        let kwic = kwic_context(&self.corpus, &self.vocab, start, n, window);
        Match {
            doc_id,
            start_offset: start as usize - doc_start,
            tokens,
            min_score,
            left: kwic.left,
            right: kwic.right,
        }
    }

    /// Engine over the first `fraction` of documents (at least one when any exist).
    ///
    /// Keeps the full vocabulary so Step 1 cost is unchanged.
    pub fn subsample(&self, fraction: f64) -> Self {
        let docs = self.corpus.doc_count();
        let keep = ((docs as f64 * fraction.clamp(0.0, 1.0)).round() as usize).clamp(docs.min(1), docs);
        let end = if keep == docs {
            self.corpus.len()
        } else {
            self.corpus.doc_offsets[keep] as usize
        };
        let corpus = TokenizedCorpus {
            tokens: self.corpus.tokens[..end].to_vec(),
            doc_offsets: self.corpus.doc_offsets[..keep].to_vec(),
            source_name: self.corpus.source_name.clone(),
        };
        let index = InvertedIndex::build(&corpus, self.vocab.len());
        Engine {
            corpus,
            vocab: self.vocab.clone(),
            index,
            embeddings: self.embeddings.clone(),
            normalizer: self.normalizer,
            candidates: self.candidates.clone(),
        }
    }
}

/// Keyword-in-context strings for the window `[start, start + n)`, with up to
/// `window` tokens of context on each side, cut at document boundaries.
pub fn kwic_context(
    corpus: &TokenizedCorpus,
    vocab: &Vocabulary,
    start: u64,
    n: usize,
    window: usize,
) -> Kwic {
    let start = start as usize;
    let doc = corpus.doc_range(corpus.doc_of(start as u64));
    let end = (start + n).min(doc.end);
    let join = |r: std::ops::Range<usize>| {
        corpus.tokens[r]
            .iter()
            .map(|&t| vocab.word(t).unwrap_or_default())
            .collect::<Vec<_>>()
            .join(" ")
    };
    Kwic {
        left: join(start.saturating_sub(window).max(doc.start)..start),
        matched: join(start..end),
        right: join(end..(end + window).min(doc.end)),
    }
}
