use std::path::Path;
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::Duration;

use tomcg::client::{run_benchmark, EndpointConfig, RetryPolicy, RunError};
use tomcg::io;
use tomcg::mock::{MockConfig, MockServer, Reply};
use tomcg_core::corpus::Dialog;
use tomcg_core::eval::PredictedAnswer;
use tomcg_core::prompt::PromptSpec;
use tomcg_core::querygen::{build_benchmark, Query};

fn corpus() -> Vec<Dialog> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic.jsonl");
    io::parse_corpus(std::fs::File::open(path).unwrap()).unwrap()
}

fn queries(corpus: &[Dialog], n: usize) -> Vec<Query> {
    let mut qs = build_benchmark(corpus, 1.0, 0).unwrap().queries;
    qs.truncate(n);
    qs
}

fn endpoint(server: &MockServer) -> EndpointConfig {
    let mut e = EndpointConfig::new(server.base_url(), "mock-model");
    e.retry = RetryPolicy {
        max_attempts: 4,
        backoff: vec![Duration::from_millis(1)],
    };
    e
}

#[tokio::test]
async fn all_yes() {
    let server = MockServer::start(MockConfig::replying("Yes"))
        .await
        .unwrap();
    let c = corpus();
    let qs = queries(&c, 40);
    let out = run_benchmark(&qs, &c, &PromptSpec::default(), &endpoint(&server))
        .await
        .unwrap();
    assert_eq!(out.predictions.len(), 40);
    assert!(out
        .predictions
        .iter()
        .all(|p| p.answer == PredictedAnswer::Yes));
    let ids: Vec<_> = out
        .predictions
        .iter()
        .map(|p| p.query_id.as_str())
        .collect();
    let want: Vec<_> = qs.iter().map(|q| q.query_id.as_str()).collect();
    assert_eq!(ids, want);
    assert!(out
        .log
        .iter()
        .all(|l| l.attempts == 1 && l.status == Some(200)));
    assert_eq!(server.stats.requests.load(Ordering::SeqCst), 40);
}

#[tokio::test]
async fn retries_rate_limit_then_answers() {
    let server = MockServer::start(MockConfig {
        fail_first: 2,
        ..MockConfig::replying("No")
    })
    .await
    .unwrap();
    let c = corpus();
    let qs = queries(&c, 1);
    let out = run_benchmark(&qs, &c, &PromptSpec::default(), &endpoint(&server))
        .await
        .unwrap();
    assert_eq!(out.predictions[0].answer, PredictedAnswer::No);
    assert_eq!(out.log[0].attempts, 3);
    assert_eq!(out.log[0].status, Some(200));
}

#[tokio::test]
async fn exhausted_retries_are_unparseable() {
    let server = MockServer::start(MockConfig {
        fail_first: 10,
        fail_status: 503,
        ..MockConfig::replying("Yes")
    })
    .await
    .unwrap();
    let c = corpus();
    let qs = queries(&c, 2);
    let out = run_benchmark(&qs, &c, &PromptSpec::default(), &endpoint(&server))
        .await
        .unwrap();
    assert!(out
        .predictions
        .iter()
        .all(|p| p.answer == PredictedAnswer::Unparseable));
    assert!(out
        .log
        .iter()
        .all(|l| l.attempts == 4 && l.status == Some(503)));
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let server = MockServer::start(MockConfig {
        fail_first: 1,
        fail_status: 400,
        ..MockConfig::replying("Yes")
    })
    .await
    .unwrap();
    let c = corpus();
    let qs = queries(&c, 1);
    let out = run_benchmark(&qs, &c, &PromptSpec::default(), &endpoint(&server))
        .await
        .unwrap();
    assert_eq!(out.predictions[0].answer, PredictedAnswer::Unparseable);
    assert_eq!(out.log[0].attempts, 1);
    assert_eq!(out.log[0].status, Some(400));
}

#[tokio::test]
async fn garbage_is_unparseable() {
    let c = corpus();
    let qs = queries(&c, 3);
    for reply in [
        Reply::Text("It could be yes or no".into()),
        Reply::MalformedBody,
    ] {
        let server = MockServer::start(MockConfig {
            reply,
            ..MockConfig::replying("")
        })
        .await
        .unwrap();
        let out = run_benchmark(&qs, &c, &PromptSpec::default(), &endpoint(&server))
            .await
            .unwrap();
        assert!(out
            .predictions
            .iter()
            .all(|p| p.answer == PredictedAnswer::Unparseable));
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrency_is_bounded() {
    let server = MockServer::start(MockConfig {
        delay: Duration::from_millis(20),
        ..MockConfig::replying("no")
    })
    .await
    .unwrap();
    let c = corpus();
    let qs = queries(&c, 30);
    let mut e = endpoint(&server);
    e.max_concurrency = 3;
    run_benchmark(&qs, &c, &PromptSpec::default(), &e)
        .await
        .unwrap();
    let max = server.stats.max_in_flight.load(Ordering::SeqCst);
    assert!(max <= 3, "{max} requests in flight");
    assert!(max >= 2, "requests were not concurrent");
}

#[tokio::test]
async fn missing_auth_variable_is_an_error() {
    let server = MockServer::start(MockConfig::replying("Yes"))
        .await
        .unwrap();
    let c = corpus();
    let qs = queries(&c, 1);
    let mut e = endpoint(&server);
    e.auth_env = Some("TOMCG_TEST_TOKEN_THAT_IS_NEVER_SET".into());
    let err = run_benchmark(&qs, &c, &PromptSpec::default(), &e)
        .await
        .unwrap_err();
    assert!(matches!(err, RunError::AuthMissing(_)));
    assert_eq!(server.stats.requests.load(Ordering::SeqCst), 0);
}

#[tokio::test]
async fn token_is_sent_and_redacted() {
    let server = MockServer::start(MockConfig {
        required_token: Some("s3cret-value".into()),
        ..MockConfig::replying("Yes")
    })
    .await
    .unwrap();
    std::env::set_var("TOMCG_TEST_TOKEN_REDACTION", "s3cret-value");
    let c = corpus();
    let qs = queries(&c, 2);
    let mut e = endpoint(&server);
    e.auth_env = Some("TOMCG_TEST_TOKEN_REDACTION".into());
    let out = run_benchmark(&qs, &c, &PromptSpec::default(), &e)
        .await
        .unwrap();
    assert!(out
        .predictions
        .iter()
        .all(|p| p.answer == PredictedAnswer::Yes));
    let mut log = Vec::new();
    io::write_jsonl(&mut log, &out.log).unwrap();
    let log = String::from_utf8(log).unwrap();
    assert!(!log.contains("s3cret-value"));
    assert!(log.contains("Bearer [REDACTED]"));
}

#[tokio::test]
async fn deterministic_mock_runs_are_reproducible() {
    let reply: Arc<dyn Fn(&str) -> String + Send + Sync> = Arc::new(|prompt: &str| {
        if prompt.len().is_multiple_of(2) {
            "Yes.".into()
        } else {
            "No.".into()
        }
    });
    let server = MockServer::start(MockConfig {
        reply: Reply::With(reply),
        ..MockConfig::replying("")
    })
    .await
    .unwrap();
    let c = corpus();
    let qs = queries(&c, 50);
    let e = endpoint(&server);
    let first = run_benchmark(&qs, &c, &PromptSpec::default(), &e)
        .await
        .unwrap();
    let second = run_benchmark(&qs, &c, &PromptSpec::default(), &e)
        .await
        .unwrap();
    assert_eq!(first.predictions, second.predictions);
    let strip = |log: &[tomcg::client::RunLogEntry]| {
        log.iter()
            .cloned()
            .map(|mut l| {
                l.latency_ms = 0;
                l
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&first.log), strip(&second.log));
    let yes = first
        .predictions
        .iter()
        .filter(|p| p.answer == PredictedAnswer::Yes)
        .count();
    assert!(yes > 0 && yes < 50);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn unreachable_endpoint_aborts_with_partial_results() {
    let c = corpus();
    let qs = queries(&c, 10);
    let stall = qs[4].text.clone();
    let reply: Arc<dyn Fn(&str) -> String + Send + Sync> = Arc::new(move |prompt: &str| {
        if prompt.ends_with(&stall) {
            std::thread::sleep(Duration::from_millis(600));
        }
        "Yes".into()
    });
    let server = MockServer::start(MockConfig {
        reply: Reply::With(reply),
        ..MockConfig::replying("")
    })
    .await
    .unwrap();
    let mut e = endpoint(&server);
    e.max_concurrency = 1;
    e.timeout = Duration::from_millis(200);
    e.retry.max_attempts = 2;
    match run_benchmark(&qs, &c, &PromptSpec::default(), &e).await {
        Err(RunError::Unreachable {
            query_id,
            attempts,
            partial,
            ..
        }) => {
            assert_eq!(query_id, qs[4].query_id);
            assert_eq!(attempts, 2);
            let done: Vec<_> = partial
                .predictions
                .iter()
                .map(|p| p.query_id.clone())
                .collect();
            let want: Vec<_> = qs[..4].iter().map(|q| q.query_id.clone()).collect();
            assert_eq!(done, want);
            assert_eq!(partial.log.len(), 4);
        }
        other => panic!("expected an unreachable error, got {other:?}"),
    }
}

#[test]
fn cli_run_model_writes_predictions_and_log() {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let server = rt
        .block_on(MockServer::start(MockConfig::replying("yes")))
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/table1.jsonl");
    let bench = dir.path().join("bench.jsonl");
    let preds = dir.path().join("preds.jsonl");
    let log = dir.path().join("run.jsonl");
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    let run = |args: Vec<String>| {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = tomcg::cli::run(
            std::iter::once("tomcg".to_owned()).chain(args),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    };
    let (code, _, _) = run(vec![
        "generate".into(),
        "--corpus".into(),
        s(&fixture),
        "--rate".into(),
        "1".into(),
        "--out".into(),
        s(&bench),
    ]);
    assert_eq!(code, 0);
    let (code, out, err) = run(vec![
        "run-model".into(),
        "--benchmark".into(),
        s(&bench),
        "--corpus".into(),
        s(&fixture),
        "--base-url".into(),
        server.base_url(),
        "--model".into(),
        "m".into(),
        "--concurrency".into(),
        "4".into(),
        "--out".into(),
        s(&preds),
        "--log".into(),
        s(&log),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("36 of 36"), "{out}");
    let predictions = io::read_predictions(std::fs::File::open(&preds).unwrap()).unwrap();
    assert_eq!(predictions.len(), 36);
    assert!(predictions.iter().all(|p| p.answer == PredictedAnswer::Yes));
    let log_lines = std::fs::read_to_string(&log).unwrap();
    assert_eq!(log_lines.lines().count(), 36);
    assert!(log_lines.contains(r#""temperature":1.0"#));

    let (code, _, err) = run(vec![
        "run-model".into(),
        "--benchmark".into(),
        s(&bench),
        "--corpus".into(),
        s(&fixture),
        "--base-url".into(),
        server.base_url(),
        "--model".into(),
        "m".into(),
        "--out".into(),
        s(&preds),
        "--log".into(),
        s(&log),
        "--api-key-env".into(),
        "TOMCG_TEST_CLI_UNSET".into(),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("TOMCG_TEST_CLI_UNSET"), "{err}");
}
