//! HTTP facade over registry, search, and engine.

pub mod endpoints;
mod error;
mod handlers;
mod payload;
pub mod wire;

pub use error::ApiError;
pub use payload::{deserialize_payload, serialize_payload};

use crate::engine::{builtin_catalog, Engine};
use crate::registry::{Registry, RegistryError};
use crate::search::{EmbeddingProvider, FallbackProvider, HttpProvider};
use axum::routing::{delete, get, post, put};
use axum::Router;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

/// Shared server state: the registry behind its single lock, plus the
/// execution engine (safe to invoke concurrently; each run is isolated).
#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Mutex<Registry>>,
    pub engine: Engine,
}

impl AppState {
    pub fn new(registry: Registry, engine: Engine) -> Self {
        AppState { registry: Arc::new(Mutex::new(registry)), engine }
    }

    /// State with the built-in catalog, an optional store file, and an
    /// optional external embedding provider.
    pub fn build(
        store_path: Option<PathBuf>,
        provider_url: Option<String>,
    ) -> Result<Self, RegistryError> {
        let provider: Arc<dyn EmbeddingProvider> = match provider_url {
            Some(url) => Arc::new(HttpProvider::new(url)),
            None => Arc::new(FallbackProvider::new()),
        };
        let registry = match store_path {
            Some(path) => Registry::with_store_path(provider, path)?,
            None => Registry::new(provider),
        };
        let engine = Engine::new(Arc::new(builtin_catalog()));
        Ok(AppState::new(registry, engine))
    }
}

/// Builds the router; paths come from [`endpoints`] so the served table
/// matches the conformance constants by construction.
pub fn router(state: AppState) -> Router {
    use endpoints::*;
    Router::new()
        .route(PE_ADD.1, post(handlers::pe_add))
        .route(PE_ALL.1, get(handlers::pe_all))
        .route(PE_BY_ID.1, get(handlers::pe_by_id))
        .route(PE_BY_NAME.1, get(handlers::pe_by_name))
        .route(PE_REMOVE_BY_ID.1, delete(handlers::pe_remove_by_id))
        .route(PE_REMOVE_BY_NAME.1, delete(handlers::pe_remove_by_name))
        .route(WORKFLOW_ADD.1, post(handlers::workflow_add))
        .route(WORKFLOW_ALL.1, get(handlers::workflow_all))
        .route(WORKFLOW_BY_ID.1, get(handlers::workflow_by_id))
        .route(WORKFLOW_BY_NAME.1, get(handlers::workflow_by_name))
        .route(WORKFLOW_PES_BY_ID.1, get(handlers::workflow_pes_by_id))
        .route(WORKFLOW_PES_BY_NAME.1, get(handlers::workflow_pes_by_name))
        .route(WORKFLOW_REMOVE_BY_ID.1, delete(handlers::workflow_remove_by_id))
        .route(WORKFLOW_REMOVE_BY_NAME.1, delete(handlers::workflow_remove_by_name))
        .route(WORKFLOW_LINK_PE.1, put(handlers::workflow_link_pe))
        .route(EXECUTION_RUN.1, post(handlers::execution_run))
        .route(REGISTRY_ALL.1, get(handlers::registry_all))
        .route(REGISTRY_SEARCH.1, get(handlers::registry_search))
        .route(AUTH_ALL.1, get(handlers::auth_all))
        .route(AUTH_LOGIN.1, post(handlers::auth_login))
        .route(AUTH_REGISTER.1, post(handlers::auth_register))
        .fallback(handlers::fallback)
        .with_state(state)
}

/// Serves the API on `listener` until the task is dropped or the process
/// exits.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
