use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, RawQuery, State};
use axum::Json;
use serde::Deserialize;
use softmatcha_core::api::{InfoResponse, RankResponse};
use softmatcha_core::engine::DEFAULT_CONTEXT;
use softmatcha_core::{score_documents, Bm25Params, SearchRequest, SearchResponse, Threshold};

use crate::error::ApiError;
use crate::state::AppState;

/// Page size when a search request does not name one.
pub const DEFAULT_LIMIT: usize = 50;

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    #[serde(default)]
    q: String,
    alpha: Option<f64>,
    limit: Option<usize>,
    offset: Option<usize>,
    context: Option<usize>,
}

fn threshold(alpha: Option<f64>, default: f64) -> Result<Threshold, ApiError> {
    Threshold::new(alpha.unwrap_or(default)).map_err(|e| ApiError::bad_request(e.to_string()))
}

/// Runs CPU-bound work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

pub async fn search(
    State(state): State<Arc<AppState>>,
    params: Result<Query<SearchParams>, QueryRejection>,
) -> Result<Json<SearchResponse>, ApiError> {
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    if params.q.trim().is_empty() {
        return Err(ApiError::bad_request("query parameter q is empty"));
    }
    let alpha = threshold(params.alpha, state.config.default_alpha)?;
    let limit = params.limit.unwrap_or(DEFAULT_LIMIT).min(state.config.max_limit);
    if limit == 0 {
        return Err(ApiError::bad_request("limit must be at least 1"));
    }
    let req = SearchRequest {
        query: params.q,
        alpha,
        limit: Some(limit),
        offset: params.offset.unwrap_or(0),
        context_window: params.context.unwrap_or(DEFAULT_CONTEXT),
    };
    let engine = state.engine();
    let resp = blocking(move || engine.search(&req).map_err(|e| ApiError::bad_request(e.to_string()))).await?;
    Ok(Json(resp))
}

pub async fn info(State(state): State<Arc<AppState>>) -> Json<InfoResponse> {
    let engine = state.engine();
    Json(InfoResponse {
        corpus_name: engine.corpus().source_name.clone(),
        n: engine.corpus().len(),
        l: engine.vocab().len(),
        doc_count: engine.corpus().doc_count(),
        embedding_dim: engine.embeddings().dim(),
        default_alpha: state.config.default_alpha,
    })
}

/// `GET /api/rank?patterns=..&patterns=..&alpha=&k1=&b=&limit=`
pub async fn rank(
    State(state): State<Arc<AppState>>,
    RawQuery(query): RawQuery,
) -> Result<Json<RankResponse>, ApiError> {
    let mut patterns = Vec::new();
    let (mut alpha, mut k1, mut b, mut limit) = (None, None, None, None);
    let num = |key: &str, v: &str| {
        v.parse::<f64>()
            .map_err(|_| ApiError::bad_request(format!("{key} is not a number: {v:?}")))
    };
    for (key, value) in url::form_urlencoded::parse(query.unwrap_or_default().as_bytes()) {
        match key.as_ref() {
            "patterns" | "pattern" => patterns.push(value.into_owned()),
            "alpha" => alpha = Some(num("alpha", &value)?),
            "k1" => k1 = Some(num("k1", &value)?),
            "b" => b = Some(num("b", &value)?),
            "limit" => {
                limit = Some(value.parse::<usize>().map_err(|_| {
                    ApiError::bad_request(format!("limit is not a count: {value:?}"))
                })?)
            }
            other => return Err(ApiError::bad_request(format!("unknown parameter {other:?}"))),
        }
    }
    if patterns.is_empty() {
        return Err(ApiError::bad_request("at least one patterns= parameter is required"));
    }
    let alpha = threshold(alpha, state.config.default_alpha)?;
    let defaults = Bm25Params::default();
    let params = Bm25Params::new(k1.unwrap_or(defaults.k1), b.unwrap_or(defaults.b))
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let engine = state.engine();
    let ranking = blocking(move || {
        score_documents(&engine, &patterns, alpha, params)
            .map(|r| (r, engine.corpus().doc_count()))
            .map_err(|e| ApiError::bad_request(e.to_string()))
    })
    .await?;
    let (mut ranking, doc_count) = ranking;
    if let Some(limit) = limit {
        ranking.results.truncate(limit);
    }
    Ok(Json(RankResponse {
        results: ranking.results,
        doc_count,
        oov_words: ranking.oov_words,
    }))
}
