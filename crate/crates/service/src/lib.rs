//! HTTP service for collecting annotation sets.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/docs` | documents with per-annotator completion |
//! | GET | `/api/docs/{id}` | one document with its tokens |
//! | GET, PUT | `/api/docs/{id}/annotations/{annotator}` | read or submit a set (versioned) |
//! | GET | `/api/gold/{id}` | gold standard adjudicated from the stored sets |
//! | POST | `/api/qualify/{annotator}` | score a set on the reference document |
//! | GET | `/api/taxonomy` | categories and their definitions |
//! | GET | `/api/next/{annotator}` | next document to annotate, if any |
//!
//! Sets are persisted in the native corpus layout, so the corpus directory
//! can be fed straight to the offline pipeline.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub mod assignment;
pub mod config;
mod routes;
mod state;

pub use assignment::assignment_policy;
pub use config::ServiceConfig;
pub use routes::router;
pub use state::AppState;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("invalid service configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] annogold::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot bind {0}: {1}")]
    Bind(String, #[source] std::io::Error),
    #[error("server stopped: {0}")]
    Serve(#[source] std::io::Error),
}

/// A service listening in the background.
pub struct RunningService {
    pub addr: SocketAddr,
    shutdown: oneshot::Sender<()>,
    handle: JoinHandle<Result<(), ServiceError>>,
}

impl RunningService {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting requests and waits for in-flight ones.
    pub async fn shutdown(self) -> Result<(), ServiceError> {
        let _ = self.shutdown.send(());
        self.handle.await.map_err(|e| ServiceError::Serve(std::io::Error::other(e)))?
    }
}

/// Loads the corpus and starts serving on `config.host:config.port`
/// (port 0 picks a free one).
pub async fn spawn(config: ServiceConfig) -> Result<RunningService, ServiceError> {
    let bind = format!("{}:{}", config.host, config.port);
    let state = Arc::new(tokio::task::spawn_blocking(move || AppState::load(config)).await.map_err(|e| ServiceError::Serve(std::io::Error::other(e)))??);
    let listener = TcpListener::bind(&bind).await.map_err(|e| ServiceError::Bind(bind.clone(), e))?;
    let addr = listener.local_addr().map_err(|e| ServiceError::Bind(bind, e))?;
    let (tx, rx) = oneshot::channel();
    let app = router(state);
    let handle = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
            .map_err(ServiceError::Serve)
    });
    tracing::info!("listening on http://{addr}");
    Ok(RunningService {
        addr,
        shutdown: tx,
        handle,
    })
}

/// Serves until Ctrl-C.
pub async fn run(config: ServiceConfig) -> Result<(), ServiceError> {
    let running = spawn(config).await?;
    println!("annogold service listening on {}", running.url());
    tokio::signal::ctrl_c().await.map_err(ServiceError::Serve)?;
    running.shutdown().await
}
