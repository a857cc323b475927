//! The `tomcg` command line.
//!
//! Machine-readable outputs go to files named by flags; standard output
//! carries a human-readable summary (and, for `infer-cg`, the divergence
//! report). Exit codes: 0 success, 1 validation or runtime failure, 2 usage
//! error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use tomcg_core::cogstate::{infer_timeline, CgDivergence};
use tomcg_core::corpus::{validate_dialog, Dialog, Split, TurnIndex};
use tomcg_core::eval::{self, AnswerFrequencies, MetricsReport, PredictedAnswer, Prediction};
use tomcg_core::labels::BeliefLabel;
use tomcg_core::prompt::PromptSpec;
use tomcg_core::querygen::{self, Query};

use crate::client::{self, EndpointConfig, RetryPolicy, RunError};
use crate::io;
use crate::provenance::Provenance;

#[derive(Debug, Parser)]
#[command(
    name = "tomcg",
    version,
    about = "Belief/common-ground benchmark generation and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a corpus file against the annotation invariants
    Validate {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Replace common ground labels with ones inferred from beliefs
    InferCg {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the yes/no benchmark from an annotated corpus
    Generate {
        #[arg(long)]
        corpus: PathBuf,
        /// Keep-probability for points labeled CT+/JA for both speakers
        #[arg(long, default_value_t = 0.1)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fill gold answers of a benchmark from a corpus
    Answer {
        #[arg(long)]
        benchmark: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write a benchmark with gold, or the answers as predictions
        #[arg(long, value_enum, default_value_t = Emit::Benchmark)]
        emit: Emit,
    },
    /// Query a chat-completions endpoint for every benchmark question
    RunModel {
        #[arg(long)]
        benchmark: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        base_url: String,
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 8)]
        concurrency: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        log: PathBuf,
        /// Environment variable holding the API token
        #[arg(long)]
        api_key_env: Option<String>,
        #[arg(long, default_value_t = 4)]
        max_attempts: u32,
        /// Comma-separated retry delays in milliseconds; the last repeats
        #[arg(long, default_value = "500,2000,8000", value_delimiter = ',')]
        backoff_ms: Vec<u64>,
        #[arg(long, default_value_t = 60)]
        timeout_secs: u64,
        #[arg(long, default_value_t = 5)]
        context_before: usize,
        #[arg(long, default_value_t = 5)]
        context_after: usize,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
    },
    /// Random yes/no baseline from training answer frequencies
    Baseline {
        #[arg(long)]
        benchmark: PathBuf,
        /// Yes and no training counts (or proportions), e.g. `2371,2899`
        #[arg(long, value_delimiter = ',', required = true)]
        train_freqs: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u32,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score predictions against a benchmark
    Evaluate {
        #[arg(long)]
        benchmark: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Yes/no answer counts per split
    Stats {
        #[arg(long)]
        benchmark: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Benchmark,
    Predictions,
}

/// Parses `args` and runs the command, writing the summary to `stdout`.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Validate { corpus } => validate(&corpus, out),
        Command::InferCg { corpus, out: path } => infer_cg(&corpus, &path, out),
        Command::Generate {
            corpus,
            rate,
            seed,
            out: path,
        } => generate(&corpus, rate, seed, &path, out),
        Command::Answer {
            benchmark,
            corpus,
            out: path,
            emit,
        } => answer(&benchmark, &corpus, &path, emit, out),
        Command::RunModel {
            benchmark,
            corpus,
            base_url,
            model,
            concurrency,
            out: path,
            log,
            api_key_env,
            max_attempts,
            backoff_ms,
            timeout_secs,
            context_before,
            context_after,
            temperature,
        } => {
            let endpoint = EndpointConfig {
                base_url,
                model_name: model,
                auth_env: api_key_env,
                max_concurrency: concurrency,
                retry: RetryPolicy {
                    max_attempts,
                    backoff: backoff_ms.into_iter().map(Duration::from_millis).collect(),
                },
                timeout: Duration::from_secs(timeout_secs),
            };
            let spec = PromptSpec {
                context_before,
                context_after,
                temperature,
                ..PromptSpec::default()
            };
            run_model(&benchmark, &corpus, &spec, &endpoint, &path, &log, out)
        }
        Command::Baseline {
            benchmark,
            train_freqs,
            seed,
            trials,
            report,
        } => baseline(
            &benchmark,
            &train_freqs,
            seed,
            trials,
            report.as_deref(),
            out,
        ),
        Command::Evaluate {
            benchmark,
            predictions,
            report,
        } => evaluate(&benchmark, &predictions, &report, out),
        Command::Stats { benchmark } => stats(&benchmark, out),
    }
}

fn load_corpus(path: &Path) -> Result<(Vec<u8>, Vec<Dialog>)> {
    let bytes = io::read_file(path)?;
    let dialogs = io::parse_corpus(bytes.as_slice())
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok((bytes, dialogs))
}

fn load_benchmark(path: &Path) -> Result<(Vec<u8>, Vec<Query>)> {
    let bytes = io::read_file(path)?;
    let queries = io::read_benchmark(bytes.as_slice())
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok((bytes, queries))
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = io::create_file(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn validate(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let bytes = io::read_file(path)?;
    let dialogs = match io::read_corpus_unvalidated(bytes.as_slice()) {
        Ok(d) => d,
        Err(e) => {
            writeln!(out, "{}: {e}", path.display())?;
            return Ok(1);
        }
    };
    let violations: Vec<_> = dialogs.iter().flat_map(validate_dialog).collect();
    for v in &violations {
        writeln!(out, "{v}")?;
    }
    let turns: usize = dialogs.iter().map(|d| d.turns.len()).sum();
    let events: usize = dialogs.iter().map(|d| d.events.len()).sum();
    writeln!(
        out,
        "{} dialog(s), {turns} turn(s), {events} event(s): {} violations",
        dialogs.len(),
        violations.len()
    )?;
    Ok(if violations.is_empty() { 0 } else { 1 })
}

#[derive(Serialize)]
struct DivergenceReport {
    rows: usize,
    divergent_rows: usize,
    unmatched_rows: Vec<UnmatchedRow>,
    divergences: Vec<DialogDivergence>,
    provenance: Provenance,
}

#[derive(Serialize)]
struct UnmatchedRow {
    dialog_id: String,
    event_id: String,
    turn: TurnIndex,
    bel_a: BeliefLabel,
    bel_b: BeliefLabel,
    diagnostic: &'static str,
}

#[derive(Serialize)]
struct DialogDivergence {
    dialog_id: String,
    #[serde(flatten)]
    divergence: CgDivergence,
}

fn infer_cg(corpus_path: &Path, out_path: &Path, out: &mut dyn Write) -> Result<i32> {
    let (bytes, dialogs) = load_corpus(corpus_path)?;
    let mut inferred = Vec::with_capacity(dialogs.len());
    let mut rows = 0;
    let mut divergences = Vec::new();
    let mut unmatched_rows = Vec::new();
    for d in &dialogs {
        let mut events = Vec::with_capacity(d.events.len());
        for e in &d.events {
            rows += e.rows.len();
            let inf = infer_timeline(e);
            for turn in &inf.unmatched {
                let r = e
                    .rows
                    .iter()
                    .find(|r| r.turn == *turn)
                    .expect("unmatched turns come from rows");
                unmatched_rows.push(UnmatchedRow {
                    dialog_id: d.dialog_id.clone(),
                    event_id: e.event_id.clone(),
                    turn: *turn,
                    bel_a: r.bel_a,
                    bel_b: r.bel_b,
                    diagnostic: tomcg_core::infer_cg(r.bel_a, r.bel_b)
                        .diagnostic()
                        .unwrap_or_default(),
                });
            }
            divergences.extend(
                inf.divergences
                    .into_iter()
                    .map(|divergence| DialogDivergence {
                        dialog_id: d.dialog_id.clone(),
                        divergence,
                    }),
            );
            events.push(inf.event);
        }
        inferred.push(Dialog {
            events,
            ..d.clone()
        });
    }
    io::write_corpus(io::create_file(out_path)?, &inferred)?;
    let provenance = Provenance::new("infer-cg").input("corpus", &bytes);
    provenance.write_sidecar(out_path)?;
    let report = DivergenceReport {
        rows,
        divergent_rows: divergences.len(),
        unmatched_rows,
        divergences,
        provenance,
    };
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)?;
    Ok(0)
}

fn generate(
    corpus_path: &Path,
    rate: f64,
    seed: u64,
    out_path: &Path,
    out: &mut dyn Write,
) -> Result<i32> {
    let (bytes, dialogs) = load_corpus(corpus_path)?;
    let mut set = querygen::build_benchmark(&dialogs, rate, seed)?;
    set.provenance.corpus_digest = Some(io::digest(&bytes));
    io::write_jsonl(io::create_file(out_path)?, &set.queries)?;
    Provenance::new("generate")
        .input("corpus", &bytes)
        .param("rate", rate)
        .param("seed", seed)
        .write_sidecar(out_path)?;
    let points = set.queries.len() / querygen::CHAINS.len() / 3;
    writeln!(
        out,
        "{} queries from {points} point(s) of interest across {} dialog(s)",
        set.queries.len(),
        dialogs.len()
    )?;
    Ok(0)
}

fn answer(
    bench_path: &Path,
    corpus_path: &Path,
    out_path: &Path,
    emit: Emit,
    out: &mut dyn Write,
) -> Result<i32> {
    let (bench_bytes, mut queries) = load_benchmark(bench_path)?;
    let (corpus_bytes, dialogs) = load_corpus(corpus_path)?;
    querygen::fill_gold(&mut queries, &dialogs)?;
    let file = io::create_file(out_path)?;
    match emit {
        Emit::Benchmark => io::write_jsonl(file, &queries)?,
        Emit::Predictions => io::write_jsonl(
            file,
            queries.iter().map(|q| Prediction {
                query_id: q.query_id.clone(),
                answer: PredictedAnswer::from(q.gold),
                raw: None,
            }),
        )?,
    }
    Provenance::new("answer")
        .input("benchmark", &bench_bytes)
        .input("corpus", &corpus_bytes)
        .param("emit", format!("{emit:?}").to_lowercase())
        .write_sidecar(out_path)?;
    let yes = queries
        .iter()
        .filter(|q| q.gold.is_some_and(|g| g.is_yes()))
        .count();
    writeln!(
        out,
        "resolved {} queries ({yes} yes, {} no)",
        queries.len(),
        queries.len() - yes
    )?;
    Ok(0)
}

fn run_model(
    bench_path: &Path,
    corpus_path: &Path,
    spec: &PromptSpec,
    endpoint: &EndpointConfig,
    out_path: &Path,
    log_path: &Path,
    out: &mut dyn Write,
) -> Result<i32> {
    let (bench_bytes, queries) = load_benchmark(bench_path)?;
    let (corpus_bytes, dialogs) = load_corpus(corpus_path)?;
    let runtime = tokio::runtime::Runtime::new()?;
    let result = runtime.block_on(client::run_benchmark(&queries, &dialogs, spec, endpoint));
    let (output, failure) = match result {
        Ok(o) => (o, None),
        Err(RunError::Unreachable {
            query_id,
            attempts,
            message,
            partial,
        }) => (
            partial,
            Some(format!(
                "endpoint unreachable after {attempts} attempt(s) on `{query_id}`: {message}"
            )),
        ),
        Err(e) => return Err(e.into()),
    };
    io::write_jsonl(io::create_file(out_path)?, &output.predictions)?;
    io::write_jsonl(io::create_file(log_path)?, &output.log)?;
    Provenance::new("run-model")
        .input("benchmark", &bench_bytes)
        .input("corpus", &corpus_bytes)
        .param("base_url", endpoint.base_url.clone())
        .param("model", endpoint.model_name.clone())
        .param("temperature", spec.temperature)
        .param("context_before", spec.context_before)
        .param("context_after", spec.context_after)
        .write_sidecar(out_path)?;
    let unparseable = output
        .predictions
        .iter()
        .filter(|p| p.answer == PredictedAnswer::Unparseable)
        .count();
    writeln!(
        out,
        "{} of {} queries answered ({unparseable} unparseable)",
        output.predictions.len(),
        queries.len()
    )?;
    if let Some(msg) = failure {
        bail!("{msg}; partial results written to {}", out_path.display());
    }
    Ok(0)
}

fn baseline(
    bench_path: &Path,
    train_freqs: &[f64],
    seed: u64,
    trials: u32,
    report: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let (bench_bytes, queries) = load_benchmark(bench_path)?;
    let &[yes, no] = train_freqs else {
        bail!("--train-freqs takes exactly two values: yes,no");
    };
    let total = yes + no;
    if !(yes >= 0.0 && no >= 0.0 && total > 0.0) {
        bail!("--train-freqs must be non-negative with a positive sum");
    }
    let freqs = AnswerFrequencies::new(yes / total, no / total)?;
    let summary = eval::random_baseline(&queries, freqs, seed, trials)?;
    writeln!(out, "p_yes={:.4} p_no={:.4}", freqs.p_yes, freqs.p_no)?;
    writeln!(out, "expected accuracy  {:.4}", summary.expected_accuracy)?;
    for (order, acc) in &summary.expected_per_order {
        writeln!(out, "  order {order}         {acc:.4}")?;
    }
    writeln!(
        out,
        "monte carlo ({trials} trials) {:.4} +/- {:.4} (sd {:.4})",
        summary.mean_accuracy, summary.standard_error, summary.stddev_accuracy
    )?;
    if let Some(path) = report {
        let provenance = Provenance::new("baseline")
            .input("benchmark", &bench_bytes)
            .param("seed", seed)
            .param("trials", trials);
        write_json_file(
            path,
            &json!({"baseline": summary, "provenance": provenance}),
        )?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct EvaluationReport {
    #[serde(flatten)]
    metrics: MetricsReport,
    provenance: Provenance,
}

fn evaluate(
    bench_path: &Path,
    preds_path: &Path,
    report_path: &Path,
    out: &mut dyn Write,
) -> Result<i32> {
    let (bench_bytes, queries) = load_benchmark(bench_path)?;
    let pred_bytes = io::read_file(preds_path)?;
    let preds = io::read_predictions(pred_bytes.as_slice())
        .with_context(|| format!("parsing {}", preds_path.display()))?;
    let metrics = eval::score(&queries, &preds)?;
    writeln!(out, "total accuracy     {:.4}", metrics.total_accuracy)?;
    for (order, acc) in &metrics.per_order_accuracy {
        writeln!(out, "order {order} accuracy   {acc:.4}")?;
    }
    writeln!(
        out,
        "consistency        {:.4} over {} proposition(s)",
        metrics.consistency, metrics.propositions
    )?;
    for (pair, r) in &metrics.correlations {
        match r {
            Some(r) => writeln!(out, "r({pair})             {r:.4}")?,
            None => writeln!(out, "r({pair})             undefined")?,
        }
    }
    writeln!(
        out,
        "answered {} / {} ({} unanswered)",
        metrics.counts.answered, metrics.counts.total, metrics.counts.unanswered
    )?;
    let provenance = Provenance::new("evaluate")
        .input("benchmark", &bench_bytes)
        .input("predictions", &pred_bytes);
    write_json_file(
        report_path,
        &EvaluationReport {
            metrics,
            provenance,
        },
    )?;
    Ok(0)
}

fn stats(bench_path: &Path, out: &mut dyn Write) -> Result<i32> {
    let (_, queries) = load_benchmark(bench_path)?;
    let counts = eval::split_counts(&queries);
    writeln!(out, "{:<6} {:<6} {:>6}", "Split", "Answer", "Count")?;
    for split in Split::ALL {
        let c = counts[&split];
        if split == Split::None && c.yes + c.no == 0 {
            continue;
        }
        writeln!(out, "{:<6} {:<6} {:>6}", split.as_str(), "no", c.no)?;
        writeln!(out, "{:<6} {:<6} {:>6}", split.as_str(), "yes", c.yes)?;
    }
    let unresolved = queries.iter().filter(|q| q.gold.is_none()).count();
    if unresolved > 0 {
        writeln!(out, "{unresolved} queries without gold")?;
    }
    Ok(0)
}
