use std::sync::{Arc, RwLock};

use softmatcha_core::{EmbeddingTable, Engine, IndexFile};

use crate::config::ServiceConfig;
use crate::error::LoadError;

/// Shared service state. The engine itself is immutable; a reload swaps in a
/// new one while requests already running keep the engine they started with.
#[derive(Debug)]
pub struct AppState {
    engine: RwLock<Arc<Engine>>,
    pub config: ServiceConfig,
}

impl AppState {
    pub fn new(engine: Engine, config: ServiceConfig) -> Self {
        AppState {
            engine: RwLock::new(Arc::new(engine)),
            config,
        }
    }

    /// Loads index and embeddings from the configured paths.
    pub fn load(config: ServiceConfig) -> Result<Self, LoadError> {
        let engine = load_engine(&config)?;
        Ok(Self::new(engine, config))
    }

    pub fn engine(&self) -> Arc<Engine> {
        self.engine.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn replace(&self, engine: Engine) {
        *self.engine.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(engine);
    }

    /// Re-reads the configured files and swaps the engine.
    pub fn reload(&self) -> Result<(), LoadError> {
        let engine = load_engine(&self.config)?;
        self.replace(engine);
        Ok(())
    }
}

pub fn load_engine(config: &ServiceConfig) -> Result<Engine, LoadError> {
    let index = IndexFile::load_path(&config.index_path)
        .map_err(|e| LoadError::Index(config.index_path.clone(), e))?;
    let embeddings = EmbeddingTable::load_path(&config.embeddings_path)
        .map_err(|e| LoadError::Embeddings(config.embeddings_path.clone(), e))?;
    Ok(Engine::from_index_file(index, embeddings))
}
