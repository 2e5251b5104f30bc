//! JSON bodies shared by the HTTP service and its client.

use serde::{Deserialize, Serialize};

use crate::bm25::RankedDoc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoResponse {
    pub corpus_name: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub doc_count: usize,
    pub embedding_dim: usize,
    pub default_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankResponse {
    pub results: Vec<RankedDoc>,
    pub doc_count: usize,
    pub oov_words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
