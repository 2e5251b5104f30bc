use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Parser;
use softmatcha_server::{serve, AppState, ServiceConfig};
use tracing_subscriber::EnvFilter;

/// Soft pattern-matching search service.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// TOML config with index_path, embeddings_path, default_alpha, bind, max_limit.
    #[arg(long, short)]
    config: PathBuf,
    /// Override the configured bind address.
    #[arg(long)]
    bind: Option<std::net::SocketAddr>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let mut config = ServiceConfig::load(&args.config)?;
    if let Some(bind) = args.bind {
        config.bind = bind;
    }
    let bind = config.bind;
    let state = Arc::new(AppState::load(config)?);
    {
        let e = state.engine();
        tracing::info!(
            "loaded {:?}: N={} L={} docs={} dim={}",
            e.corpus().source_name,
            e.corpus().len(),
            e.vocab().len(),
            e.corpus().doc_count(),
            e.embeddings().dim()
        );
    }
    #[cfg(unix)]
    tokio::spawn(reload_on_hangup(state.clone()));

    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .with_context(|| format!("cannot bind {bind}"))?;
    tracing::info!("listening on {}", listener.local_addr()?);
    serve(listener, state, shutdown_signal()).await?;
    Ok(())
}

#[cfg(unix)]
async fn reload_on_hangup(state: Arc<AppState>) {
    use tokio::signal::unix::{signal, SignalKind};
    let Ok(mut hup) = signal(SignalKind::hangup()) else { return };
    while hup.recv().await.is_some() {
        let s = state.clone();
        match tokio::task::spawn_blocking(move || s.reload()).await {
            Ok(Ok(())) => tracing::info!("reloaded index and embeddings"),
            Ok(Err(e)) => tracing::error!("reload failed, keeping current engine: {e}"),
            Err(e) => tracing::error!("reload task failed: {e}"),
        }
    }
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        if let Ok(mut s) = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            s.recv().await;
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down");
}
