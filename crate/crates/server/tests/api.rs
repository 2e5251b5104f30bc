use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use softmatcha_core::text::tokenize_documents;
use softmatcha_core::{score_documents, Bm25Params, EmbeddingTable, Engine, Normalizer, Threshold};
use softmatcha_server::{router, AppState, ServiceConfig};
use tower::ServiceExt;

fn toy_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/toy")
}

fn engine(docs: &[&str]) -> Engine {
    let norm = Normalizer::default();
    let (c, v) = tokenize_documents(docs, &norm);
    let e = EmbeddingTable::load_path(toy_dir().join("embeddings.txt")).unwrap();
    Engine::new(c, v, e, norm).unwrap()
}

fn state(docs: &[&str]) -> Arc<AppState> {
    let cfg = ServiceConfig::new("unused.smix", toy_dir().join("embeddings.txt"));
    Arc::new(AppState::new(engine(docs), cfg))
}

fn toy_state() -> Arc<AppState> {
    let text = std::fs::read_to_string(toy_dir().join("corpus.txt")).unwrap();
    state(&[text.trim()])
}

async fn get(state: &Arc<AppState>, uri: &str) -> (StatusCode, Value) {
    let resp = router(state.clone())
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn strip_timing(mut v: Value) -> Value {
    if let Some(stats) = v.get_mut("stats").and_then(Value::as_object_mut) {
        stats.remove("soften_ms");
        stats.remove("match_ms");
    }
    v
}

#[tokio::test]
async fn exact_query_finds_one_match() {
    let s = toy_state();
    let (status, body) = get(&s, "/api/search?q=a%20jazz&alpha=1.0").await;
    assert_eq!(status, StatusCode::OK);
    let matches = body["matches"].as_array().unwrap();
    assert_eq!(matches.len(), 1);
    assert_eq!(matches[0]["doc_id"], 0);
    assert_eq!(matches[0]["start_offset"], 1);
    assert_eq!(body["total_hits"], 1);
    assert_eq!(body["stats"]["n"], 2);
}

#[tokio::test]
async fn soft_query_paginates() {
    let s = toy_state();
    let (_, all) = get(&s, "/api/search?q=a+jazz&alpha=0.5").await;
    assert_eq!(all["total_hits"], 2);
    let (status, page) = get(&s, "/api/search?q=a+jazz&alpha=0.5&limit=1").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(page["matches"].as_array().unwrap().len(), 1);
    assert_eq!(page["total_hits"], 2);
    let (_, second) = get(&s, "/api/search?q=a+jazz&alpha=0.5&limit=1&offset=1").await;
    assert_eq!(second["matches"][0], all["matches"][1]);
}

#[tokio::test]
async fn bad_requests_are_400_with_error_body() {
    let s = toy_state();
    for uri in [
        "/api/search?q=jazz&alpha=0",
        "/api/search?q=jazz&alpha=1.5",
        "/api/search?q=jazz&alpha=abc",
        "/api/search?q=%20%20",
        "/api/search",
        "/api/search?q=jazz&limit=0",
        "/api/rank",
        "/api/rank?patterns=jazz&k1=-1",
        "/api/rank?patterns=jazz&bogus=1",
    ] {
        let (status, body) = get(&s, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        assert!(body["error"].as_str().is_some_and(|e| !e.is_empty()), "{uri}");
    }
}

#[tokio::test]
async fn oov_query_is_empty_success() {
    let s = toy_state();
    let (status, body) = get(&s, "/api/search?q=a+saxophone").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["matches"].as_array().unwrap().len(), 0);
    assert_eq!(body["oov_words"], serde_json::json!(["saxophone"]));
}

#[tokio::test]
async fn limit_is_capped() {
    let docs: Vec<String> = (0..30).map(|_| "a jazz".to_string()).collect();
    let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
    let mut cfg = ServiceConfig::new("unused", "unused");
    cfg.max_limit = 5;
    let s = Arc::new(AppState::new(engine(&refs), cfg));
    let (_, body) = get(&s, "/api/search?q=jazz&limit=100").await;
    assert_eq!(body["matches"].as_array().unwrap().len(), 5);
    assert_eq!(body["total_hits"], 30);
}

#[tokio::test]
async fn info_reports_sizes_and_follows_reload() {
    let s = toy_state();
    let (status, body) = get(&s, "/api/info").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["N"], 10);
    assert_eq!(body["L"], 9);
    assert_eq!(body["doc_count"], 1);
    assert_eq!(body["embedding_dim"], 19);
    assert_eq!(body["default_alpha"], 0.55);

    let empty = state(&[""]);
    let (_, body) = get(&empty, "/api/info").await;
    assert_eq!(body["N"], 0);

    s.replace(engine(&["a jazz", "the blues band"]));
    let (_, body) = get(&s, "/api/info").await;
    assert_eq!(body["N"], 5);
    assert_eq!(body["doc_count"], 2);
}

#[tokio::test]
async fn reload_reads_configured_files() {
    let dir = std::env::temp_dir().join(format!("softmatcha-reload-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let index_path = dir.join("toy.smix");
    let write = |docs: &[&str]| {
        let norm = Normalizer::default();
        let (c, v) = tokenize_documents(docs, &norm);
        softmatcha_core::IndexFile::build(&c, v, norm).save_path(&index_path).unwrap();
    };
    write(&["a jazz"]);
    let cfg = ServiceConfig::new(&index_path, toy_dir().join("embeddings.txt"));
    let s = Arc::new(AppState::load(cfg).unwrap());
    assert_eq!(get(&s, "/api/info").await.1["N"], 2);
    write(&["a jazz pianist", "plays funk"]);
    s.reload().unwrap();
    assert_eq!(get(&s, "/api/info").await.1["N"], 5);
    // a failed reload keeps the current engine
    std::fs::write(&index_path, b"junk").unwrap();
    assert!(s.reload().is_err());
    assert_eq!(get(&s, "/api/info").await.1["N"], 5);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[tokio::test]
async fn rank_matches_library() {
    let docs = ["a jazz pianist", "the blues singer plays blues", "when a band plays", "funk"];
    let s = state(&docs);
    let (status, body) = get(&s, "/api/rank?patterns=a+jazz&patterns=plays&alpha=0.5").await;
    assert_eq!(status, StatusCode::OK);
    let expected = score_documents(
        &engine(&docs),
        &["a jazz", "plays"],
        Threshold::new(0.5).unwrap(),
        Bm25Params::default(),
    )
    .unwrap();
    assert_eq!(body["doc_count"], 4);
    let results = body["results"].as_array().unwrap();
    assert_eq!(results.len(), expected.results.len());
    for (got, want) in results.iter().zip(&expected.results) {
        assert_eq!(got["doc_id"], want.doc_id);
        assert!((got["score"].as_f64().unwrap() - want.score).abs() < 1e-12);
    }
    let (_, limited) = get(&s, "/api/rank?patterns=jazz&limit=2").await;
    assert_eq!(limited["results"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn repeated_and_concurrent_queries_agree() {
    let s = toy_state();
    let uri = "/api/search?q=the+jazz+musician&alpha=0.7";
    let first = strip_timing(get(&s, uri).await.1);
    assert_eq!(first, strip_timing(get(&s, uri).await.1));

    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let s = s.clone();
            tokio::spawn(async move { strip_timing(get(&s, uri).await.1) })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap(), first);
    }
}
