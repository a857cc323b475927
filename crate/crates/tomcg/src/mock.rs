//! A scriptable in-process chat-completions server for tests and dry runs.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

/// Produces the assistant text for a prompt.
pub type ReplyFn = Arc<dyn Fn(&str) -> String + Send + Sync>;

#[derive(Clone)]
pub enum Reply {
    Text(String),
    /// Computed from the prompt (the single user message).
    With(ReplyFn),
    /// HTTP 200 with a body that is not a chat completion.
    MalformedBody,
}

#[derive(Clone)]
pub struct MockConfig {
    pub reply: Reply,
    /// Each distinct prompt is answered with `fail_status` this many times
    /// before succeeding.
    pub fail_first: u32,
    pub fail_status: u16,
    /// Artificial latency per request.
    pub delay: Duration,
    /// When set, requests must carry `Authorization: Bearer <token>`.
    pub required_token: Option<String>,
}

impl MockConfig {
    pub fn replying(text: &str) -> Self {
        Self {
            reply: Reply::Text(text.into()),
            fail_first: 0,
            fail_status: 429,
            delay: Duration::ZERO,
            required_token: None,
        }
    }
}

#[derive(Debug, Default)]
pub struct MockStats {
    pub requests: AtomicUsize,
    pub in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
}

struct Shared {
    config: MockConfig,
    stats: Arc<MockStats>,
    attempts: Mutex<HashMap<String, u32>>,
}

pub struct MockServer {
    pub addr: SocketAddr,
    pub stats: Arc<MockStats>,
    handle: JoinHandle<()>,
}

impl MockServer {
    pub async fn start(config: MockConfig) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let stats = Arc::new(MockStats::default());
        let shared = Arc::new(Shared {
            config,
            stats: stats.clone(),
            attempts: Mutex::new(HashMap::new()),
        });
        let app = Router::new()
            .route("/v1/chat/completions", post(completions))
            .with_state(shared);
        let handle = tokio::spawn(async move {
            let _ = axum::serve(listener, app).await;
        });
        Ok(Self {
            addr,
            stats,
            handle,
        })
    }

    /// Base URL to put in an endpoint config.
    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.handle.abort();
    }
}

struct InFlight<'a>(&'a MockStats);

impl<'a> InFlight<'a> {
    fn enter(stats: &'a MockStats) -> Self {
        let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        stats.max_in_flight.fetch_max(now, Ordering::SeqCst);
        Self(stats)
    }
}

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
    }
}

async fn completions(
    State(shared): State<Arc<Shared>>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> Response {
    let stats = &shared.stats;
    stats.requests.fetch_add(1, Ordering::SeqCst);
    let _guard = InFlight::enter(stats);
    let cfg = &shared.config;
    if !cfg.delay.is_zero() {
        tokio::time::sleep(cfg.delay).await;
    }

    if let Some(token) = &cfg.required_token {
        let expected = format!("Bearer {token}");
        let sent = headers.get("authorization").and_then(|v| v.to_str().ok());
        if sent != Some(expected.as_str()) {
            return (
                StatusCode::UNAUTHORIZED,
                Json(json!({"error": "unauthorized"})),
            )
                .into_response();
        }
    }

    let prompt = body
        .pointer("/messages/0/content")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_owned();
    let seen = {
        let mut attempts = shared.attempts.lock().expect("attempt map poisoned");
        let n = attempts.entry(prompt.clone()).or_insert(0);
        *n += 1;
        *n
    };
    if seen <= cfg.fail_first {
        let status = StatusCode::from_u16(cfg.fail_status).unwrap_or(StatusCode::TOO_MANY_REQUESTS);
        return (status, Json(json!({"error": "scripted failure"}))).into_response();
    }

    let text = match &cfg.reply {
        Reply::Text(t) => t.clone(),
        Reply::With(f) => f(&prompt),
        Reply::MalformedBody => return (StatusCode::OK, "<html>oops</html>").into_response(),
    };
    Json(json!({
        "id": "mock",
        "object": "chat.completion",
        "model": body.get("model").cloned().unwrap_or(Value::Null),
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": text},
            "finish_reason": "stop"
        }]
    }))
    .into_response()
}
