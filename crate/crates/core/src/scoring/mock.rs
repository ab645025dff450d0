//! Local server implementing the `/score` contract.
//!
//! Scripted prompts (keyed by the SHA-256 hex of the prompt text) get their
//! scripted vector back verbatim; everything else is answered by the overlap
//! oracle.

use std::collections::BTreeMap;
use std::fs;
use std::future::Future;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

use crate::error::{Error, Result};
use crate::seed::text_hash;

use super::{OverlapScorer, ScoreRequest, ScoreResponse, Scorer};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MockScript(BTreeMap<String, Vec<f64>>);

impl MockScript {
    pub fn new() -> Self {
        Self::default()
    }

    /// JSON object mapping prompt hashes to log-likelihood vectors.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::Config(format!("script {}: {e}", path.display())))
    }

    pub fn insert_prompt(&mut self, prompt: &str, scores: Vec<f64>) {
        self.0.insert(text_hash(prompt), scores);
    }

    pub fn insert_hash(&mut self, hash: impl Into<String>, scores: Vec<f64>) {
        self.0.insert(hash.into().to_ascii_lowercase(), scores);
    }

    pub fn get(&self, prompt: &str) -> Option<&[f64]> {
        self.0.get(&text_hash(prompt)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    #[derive(Serialize)]
    struct Body {
        error: String,
    }
    (status, Json(Body { error: message.into() })).into_response()
}

async fn score(State(script): State<Arc<MockScript>>, body: Bytes) -> Response {
    let request: ScoreRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid request: {e}")),
    };
    if let Err(e) = request.validate() {
        return error(StatusCode::BAD_REQUEST, e.to_string());
    }
    if let Some(scores) = script.get(&request.prompt) {
        return Json(ScoreResponse {
            log_likelihoods: scores.to_vec(),
            token_counts: None,
        })
        .into_response();
    }
    match OverlapScorer.score(&request) {
        Ok(r) => Json(r).into_response(),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    }
}

async fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, "only POST /score is served")
}

pub fn router(script: MockScript) -> Router {
    Router::new()
        .route("/score", post(score))
        .fallback(not_found)
        .with_state(Arc::new(script))
}

/// Serve on an already-bound listener until `shutdown` resolves, then drain
/// in-flight requests.
pub async fn serve<F>(listener: tokio::net::TcpListener, script: MockScript, shutdown: F) -> Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(script))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| Error::Server(e.to_string()))
}

fn bind(addr: &str) -> Result<std::net::TcpListener> {
    let listener = std::net::TcpListener::bind(addr).map_err(|e| Error::Server(format!("bind {addr}: {e}")))?;
    listener
        .set_nonblocking(true)
        .map_err(|e| Error::Server(e.to_string()))?;
    Ok(listener)
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .map_err(|e| Error::Server(e.to_string()))
}

/// A server running on a background thread. Dropping it shuts it down.
pub struct MockServer {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<Result<()>>>,
}

impl MockServer {
    /// Bind `addr` (use port 0 for an ephemeral port) and start serving.
    pub fn start(addr: &str, script: MockScript) -> Result<Self> {
        let listener = bind(addr)?;
        let addr = listener.local_addr().map_err(|e| Error::Server(e.to_string()))?;
        let rt = runtime()?;
        let (tx, rx) = oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            rt.block_on(async move {
                let listener =
                    tokio::net::TcpListener::from_std(listener).map_err(|e| Error::Server(e.to_string()))?;
                serve(listener, script, async {
                    let _ = rx.await;
                })
                .await
            })
        });
        Ok(MockServer {
            addr,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) -> Result<()> {
        self.shutdown_inner()
    }

    fn shutdown_inner(&mut self) -> Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t
                .join()
                .map_err(|_| Error::Server("server thread panicked".into()))?,
            None => Ok(()),
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        let _ = self.shutdown_inner();
    }
}

/// Serve in the foreground until SIGINT or SIGTERM. `on_ready` receives the
/// bound address before the first request is accepted.
pub fn serve_until_signal(addr: &str, script: MockScript, on_ready: impl FnOnce(SocketAddr)) -> Result<()> {
    let listener = bind(addr)?;
    on_ready(listener.local_addr().map_err(|e| Error::Server(e.to_string()))?);
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::from_std(listener).map_err(|e| Error::Server(e.to_string()))?;
        serve(listener, script, termination()).await
    })
}

async fn termination() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}
