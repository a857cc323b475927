//! Running a benchmark against a chat-completions endpoint.
//!
//! One request per query, each carrying the full zero-shot prompt as a
//! single user message. At most `max_concurrency` requests are in flight.
//! Rate limiting (429), server errors and transport failures are retried
//! on the configured backoff schedule; a query whose retries all fail on
//! transport errors aborts the run.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tomcg_core::corpus::Dialog;
use tomcg_core::eval::{PredictedAnswer, Prediction};
use tomcg_core::prompt::{build_prompt, parse_answer, PromptError, PromptSpec};
use tomcg_core::querygen::Query;

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before attempt `n + 1`; the last entry repeats.
    pub backoff: Vec<Duration>,
}

impl RetryPolicy {
    fn delay_after(&self, attempt: u32) -> Duration {
        let i = (attempt as usize).saturating_sub(1);
        self.backoff
            .get(i)
            .or(self.backoff.last())
            .copied()
            .unwrap_or_default()
    }
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            backoff: vec![
                Duration::from_millis(500),
                Duration::from_secs(2),
                Duration::from_secs(8),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    /// Requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_env: Option<String>,
    pub max_concurrency: usize,
    pub retry: RetryPolicy,
    pub timeout: Duration,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            auth_env: None,
            max_concurrency: 8,
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(60),
        }
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

/// One query's outcome as recorded in the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub query_id: String,
    pub attempts: u32,
    pub latency_ms: u64,
    /// HTTP status of the last attempt, if any response arrived.
    pub status: Option<u16>,
    /// Model text from the response.
    pub raw: Option<String>,
    pub answer: PredictedAnswer,
    pub error: Option<String>,
    pub request: Value,
    /// Verbatim body of the last response.
    pub response: Option<String>,
    /// Always redacted when a token was sent.
    pub authorization: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub predictions: Vec<Prediction>,
    pub log: Vec<RunLogEntry>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("auth environment variable `{0}` is not set")]
    AuthMissing(String),
    #[error("invalid endpoint config: {0}")]
    InvalidConfig(&'static str),
    #[error("query `{query_id}`: dialog `{dialog_id}` is not in the corpus")]
    UnknownDialog { query_id: String, dialog_id: String },
    #[error("query `{query_id}`: {source}")]
    Prompt {
        query_id: String,
        #[source]
        source: PromptError,
    },
    #[error("endpoint unreachable after {attempts} attempt(s) on query `{query_id}`: {message}")]
    Unreachable {
        query_id: String,
        attempts: u32,
        message: String,
        /// Queries completed before the abort, in input order.
        partial: RunOutput,
    },
    #[error("http client: {0}")]
    Client(#[from] reqwest::Error),
}

enum Attempt {
    Done {
        status: u16,
        body: String,
    },
    Retryable {
        status: Option<u16>,
        body: Option<String>,
        message: String,
    },
    Fatal {
        status: u16,
        body: String,
    },
}

struct Outcome {
    entry: RunLogEntry,
    unreachable: bool,
}

async fn attempt_once(
    client: &reqwest::Client,
    url: &str,
    token: Option<&str>,
    body: &Value,
) -> Attempt {
    let mut req = client.post(url).json(body);
    if let Some(t) = token {
        req = req.bearer_auth(t);
    }
    match req.send().await {
        Err(e) => Attempt::Retryable {
            status: None,
            body: None,
            message: e.to_string(),
        },
        Ok(resp) => {
            let status = resp.status();
            let text = match resp.text().await {
                Ok(t) => t,
                Err(e) => {
                    return Attempt::Retryable {
                        status: Some(status.as_u16()),
                        body: None,
                        message: e.to_string(),
                    }
                }
            };
            if status.is_success() {
                Attempt::Done {
                    status: status.as_u16(),
                    body: text,
                }
            } else if status.as_u16() == 429 || status.is_server_error() {
                Attempt::Retryable {
                    status: Some(status.as_u16()),
                    message: format!("HTTP {status}"),
                    body: Some(text),
                }
            } else {
                Attempt::Fatal {
                    status: status.as_u16(),
                    body: text,
                }
            }
        }
    }
}

fn message_content(body: &str) -> Option<String> {
    let v: Value = serde_json::from_str(body).ok()?;
    v.pointer("/choices/0/message/content")?
        .as_str()
        .map(str::to_owned)
}

async fn run_one(
    client: &reqwest::Client,
    endpoint: &EndpointConfig,
    token: Option<&str>,
    query_id: String,
    body: Value,
) -> Outcome {
    let url = endpoint.url();
    let started = Instant::now();
    let mut attempts = 0;
    let mut status;
    let mut response;
    let mut error = None;
    let mut raw = None;
    let mut unreachable = false;

    loop {
        attempts += 1;
        match attempt_once(client, &url, token, &body).await {
            Attempt::Done {
                status: s,
                body: text,
            } => {
                status = Some(s);
                raw = message_content(&text);
                if raw.is_none() {
                    error = Some("response has no choices[0].message.content".into());
                }
                response = Some(text);
                break;
            }
            Attempt::Fatal {
                status: s,
                body: text,
            } => {
                status = Some(s);
                error = Some(format!("HTTP {s}"));
                response = Some(text);
                break;
            }
            Attempt::Retryable {
                status: s,
                body: text,
                message,
            } => {
                status = s;
                response = text;
                error = Some(message);
                if attempts >= endpoint.retry.max_attempts {
                    unreachable = s.is_none();
                    break;
                }
                tokio::time::sleep(endpoint.retry.delay_after(attempts)).await;
            }
        }
    }

    let answer = PredictedAnswer::from(raw.as_deref().and_then(parse_answer));
    Outcome {
        entry: RunLogEntry {
            query_id,
            attempts,
            latency_ms: started.elapsed().as_millis() as u64,
            status,
            raw,
            answer,
            error,
            request: body,
            response,
            authorization: token.map(|_| "Bearer [REDACTED]".to_owned()),
        },
        unreachable,
    }
}

/// Sends every query to the endpoint and returns predictions and the run
/// log, both in input order.
pub async fn run_benchmark(
    queries: &[Query],
    corpus: &[Dialog],
    spec: &PromptSpec,
    endpoint: &EndpointConfig,
) -> Result<RunOutput, RunError> {
    if endpoint.max_concurrency < 1 {
        return Err(RunError::InvalidConfig(
            "max_concurrency must be at least 1",
        ));
    }
    if endpoint.retry.max_attempts < 1 {
        return Err(RunError::InvalidConfig("max_attempts must be at least 1"));
    }
    let token = match &endpoint.auth_env {
        Some(var) => Some(std::env::var(var).map_err(|_| RunError::AuthMissing(var.clone()))?),
        None => None,
    };

    let mut bodies = Vec::with_capacity(queries.len());
    for q in queries {
        let dialog = corpus
            .iter()
            .find(|d| d.dialog_id == q.dialog_id)
            .ok_or_else(|| RunError::UnknownDialog {
                query_id: q.query_id.clone(),
                dialog_id: q.dialog_id.clone(),
            })?;
        let prompt = build_prompt(q, dialog, spec).map_err(|source| RunError::Prompt {
            query_id: q.query_id.clone(),
            source,
        })?;
        bodies.push(json!({
            "model": endpoint.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": spec.temperature,
        }));
    }

    let client = reqwest::Client::builder()
        .timeout(endpoint.timeout)
        .build()?;
    let abort = AtomicBool::new(false);
    let token = token.as_deref();

    let mut results: Vec<(usize, Outcome)> = stream::iter(queries.iter().zip(bodies).enumerate())
        .map(|(i, (q, body))| {
            let (client, abort) = (&client, &abort);
            async move {
                if abort.load(Ordering::SeqCst) {
                    return None;
                }
                let outcome = run_one(client, endpoint, token, q.query_id.clone(), body).await;
                if outcome.unreachable {
                    abort.store(true, Ordering::SeqCst);
                }
                Some((i, outcome))
            }
        })
        .buffer_unordered(endpoint.max_concurrency)
        .filter_map(|r| async move { r })
        .collect()
        .await;
    results.sort_by_key(|(i, _)| *i);

    let failed = results.iter().find(|(_, o)| o.unreachable).map(|(_, o)| {
        (
            o.entry.query_id.clone(),
            o.entry.attempts,
            o.entry.error.clone(),
        )
    });
    let mut out = RunOutput::default();
    for (_, o) in results {
        if o.unreachable {
            continue;
        }
        out.predictions.push(Prediction {
            query_id: o.entry.query_id.clone(),
            answer: o.entry.answer,
            raw: o.entry.raw.clone(),
        });
        out.log.push(o.entry);
    }
    match failed {
        Some((query_id, attempts, message)) => Err(RunError::Unreachable {
            query_id,
            attempts,
            message: message.unwrap_or_default(),
            partial: out,
        }),
        None => Ok(out),
    }
}
