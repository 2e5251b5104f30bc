//! Async client for the softmatcha HTTP service.

use reqwest::StatusCode;
use softmatcha_core::api::{ErrorBody, InfoResponse, RankResponse};
use softmatcha_core::{Bm25Params, SearchRequest, SearchResponse, Threshold};
use thiserror::Error;
use url::Url;

pub use softmatcha_core;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid server URL: {0}")]
    Url(#[from] url::ParseError),
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server returned {status}: {message}")]
    Api { status: StatusCode, message: String },
}

impl ClientError {
    /// True when the server rejected the request itself (a 4xx answer).
    pub fn is_bad_request(&self) -> bool {
        matches!(self, ClientError::Api { status, .. } if status.is_client_error())
    }
}

#[derive(Debug, Clone)]
pub struct SoftMatchaClient {
    base: Url,
    http: reqwest::Client,
}

impl SoftMatchaClient {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: &str) -> Result<Self, ClientError> {
        let mut base = Url::parse(base)?;
        if !base.path().ends_with('/') {
            let path = format!("{}/", base.path());
            base.set_path(&path);
        }
        Ok(SoftMatchaClient {
            base,
            http: reqwest::Client::new(),
        })
    }

    pub fn base_url(&self) -> &Url {
        &self.base
    }

    fn endpoint(&self, path: &str, query: &[(&str, String)]) -> Result<Url, ClientError> {
        let mut url = self.base.join(path)?;
        if !query.is_empty() {
            url.query_pairs_mut().extend_pairs(query);
        }
        Ok(url)
    }

    async fn get<T: serde::de::DeserializeOwned>(&self, url: Url) -> Result<T, ClientError> {
        let resp = self.http.get(url).send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let text = resp.text().await.unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text)
            .map(|b| b.error)
            .unwrap_or(text);
        Err(ClientError::Api { status, message })
    }

    pub async fn info(&self) -> Result<InfoResponse, ClientError> {
        self.get(self.endpoint("api/info", &[])?).await
    }

    pub async fn search(&self, req: &SearchRequest) -> Result<SearchResponse, ClientError> {
        let mut q = vec![
            ("q", req.query.clone()),
            ("alpha", req.alpha.get().to_string()),
            ("offset", req.offset.to_string()),
            ("context", req.context_window.to_string()),
        ];
        if let Some(limit) = req.limit {
            q.push(("limit", limit.to_string()));
        }
        self.get(self.endpoint("api/search", &q)?).await
    }

    pub async fn rank<S: AsRef<str>>(
        &self,
        patterns: &[S],
        alpha: Threshold,
        params: Bm25Params,
        limit: Option<usize>,
    ) -> Result<RankResponse, ClientError> {
        let mut q: Vec<(&str, String)> = patterns
            .iter()
            .map(|p| ("patterns", p.as_ref().to_string()))
            .collect();
        q.push(("alpha", alpha.get().to_string()));
        q.push(("k1", params.k1.to_string()));
        q.push(("b", params.b.to_string()));
        if let Some(limit) = limit {
            q.push(("limit", limit.to_string()));
        }
        self.get(self.endpoint("api/rank", &q)?).await
    }
}
