//! Soft n-gram pattern matching.
//!
//! A query pattern `p1 .. pn` matches corpus window `t_i .. t_{i+n-1}` when every
//! `t_{i+k}` has embedding cosine at least `alpha` with `p_k`. Matching runs in
//! three steps: soften each pattern word over the vocabulary
//! ([`embeddings::SoftCandidates::soften`]), union the posting lists of the
//! softened words ([`index::soft_postings`]), then intersect the unions after
//! shifting each by its pattern offset ([`index::shift_intersect`]).
//!
//! The result is a complete enumeration: every qualifying window is returned.

pub mod api;
pub mod bench;
pub mod bm25;
pub mod embeddings;
pub mod engine;
pub mod error;
pub mod format;
pub mod index;
#[doc(hidden)]
pub mod oracle;
pub mod synthetic;
pub mod text;

pub use bm25::{score_documents, Bm25Params, RankedDoc, Ranking};
pub use embeddings::{soften_pattern, EmbeddingTable, SoftPattern, Threshold, DEFAULT_ALPHA};
pub use engine::{kwic_context, Engine, Match, SearchRequest, SearchResponse, SearchStats};
pub use error::{Bm25Error, CorpusError, EmbeddingError, IndexFormatError, InvalidThreshold, SearchError};
pub use format::IndexFile;
pub use index::{shift_intersect, soft_postings, InvertedIndex, MatchSet};
pub use text::{tokenize_corpus, DocumentMode, Normalizer, TokenizedCorpus, Vocabulary, WordId};
