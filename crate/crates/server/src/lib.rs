//! HTTP/JSON service over a single softmatcha corpus.
//!
//! Endpoints:
//!
//! - `GET /api/search?q=&alpha=&limit=&offset=&context=`
//! - `GET /api/info`
//! - `GET /api/rank?patterns=&patterns=&alpha=&k1=&b=&limit=`

pub mod config;
pub mod error;
pub mod routes;
pub mod state;

use std::sync::Arc;

use axum::http::{HeaderValue, Method};
use axum::routing::get;
use axum::Router;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

pub use config::ServiceConfig;
pub use error::{ApiError, ConfigError, LoadError};
pub use state::AppState;

pub fn router(state: Arc<AppState>) -> Router {
    let cors = state.config.cors_origin.as_deref().map(cors_layer);
    let static_dir = state.config.static_dir.clone();
    let mut app = Router::new()
        .route("/api/search", get(routes::search))
        .route("/api/info", get(routes::info))
        .route("/api/rank", get(routes::rank))
        .with_state(state);
    if let Some(dir) = static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    if let Some(cors) = cors {
        app = app.layer(cors);
    }
    app
}

fn cors_layer(origin: &str) -> CorsLayer {
    let allow = if origin == "*" {
        AllowOrigin::any()
    } else {
        match HeaderValue::from_str(origin) {
            Ok(v) => AllowOrigin::exact(v),
            Err(_) => {
                tracing::warn!("ignoring invalid cors_origin {origin:?}");
                return CorsLayer::new();
            }
        }
    };
    CorsLayer::new().allow_origin(allow).allow_methods([Method::GET])
}

/// Serves `state` on `listener` until `shutdown` resolves; in-flight requests complete.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
