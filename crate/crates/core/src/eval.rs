//! Scoring predictions against gold answers.
//!
//! A "proposition" is a `(dialog_id, event_id)` pair and aggregates every
//! anchor point of that event. Consistency is the fraction of propositions
//! whose queries are all answered correctly; the cross-order correlations
//! are Pearson's r over per-proposition per-order accuracies.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answers::Answer;
use crate::corpus::Split;
use crate::querygen::Query;

/// A model's answer; `Unparseable` is scored as incorrect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictedAnswer {
    Yes,
    No,
    Unparseable,
}

impl PredictedAnswer {
    pub fn answer(self) -> Option<Answer> {
        match self {
            PredictedAnswer::Yes => Some(Answer::Yes),
            PredictedAnswer::No => Some(Answer::No),
            PredictedAnswer::Unparseable => None,
        }
    }
}

impl From<Answer> for PredictedAnswer {
    fn from(a: Answer) -> Self {
        match a {
            Answer::Yes => PredictedAnswer::Yes,
            Answer::No => PredictedAnswer::No,
        }
    }
}

impl From<Option<Answer>> for PredictedAnswer {
    fn from(a: Option<Answer>) -> Self {
        a.map_or(PredictedAnswer::Unparseable, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub query_id: String,
    pub answer: PredictedAnswer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("prediction references unknown query `{0}`")]
    UnknownQuery(String),
    #[error("more than one prediction for query `{0}`")]
    DuplicatePrediction(String),
    #[error("query `{0}` has no gold answer")]
    MissingGold(String),
    #[error("pearson inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("pearson needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("answer frequencies must be non-negative and sum to 1, got yes={yes} no={no}")]
    InvalidFrequencies { yes: f64, no: f64 },
}

/// Pearson's product-moment correlation; `None` when either input has zero
/// variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Option<f64>, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(EvalError::TooFewPoints(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0)))
}

/// A pair of query orders, serialized as `"1-2"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderPair(pub u8, pub u8);

impl OrderPair {
    pub const ALL: [OrderPair; 3] = [OrderPair(1, 2), OrderPair(1, 3), OrderPair(2, 3)];
}

impl fmt::Display for OrderPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

impl Serialize for OrderPair {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OrderPair {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let parse = |p: Option<&str>| p.and_then(|v| v.parse::<u8>().ok());
        let mut parts = s.splitn(2, '-');
        match (parse(parts.next()), parse(parts.next())) {
            (Some(a), Some(b)) => Ok(OrderPair(a, b)),
            _ => Err(serde::de::Error::custom(
                "expected an order pair like `1-2`",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub answered: usize,
    pub unanswered: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub total_accuracy: f64,
    pub per_order_accuracy: BTreeMap<u8, f64>,
    pub consistency: f64,
    /// `None` when undefined (zero variance or fewer than two propositions).
    pub correlations: BTreeMap<OrderPair, Option<f64>>,
    pub counts: Counts,
    pub propositions: usize,
    pub proposition_grouping: String,
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    correct: usize,
    total: usize,
}

impl Tally {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += usize::from(correct);
    }

    fn accuracy(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Scores `preds` against the gold answers of `queries`. Queries without a
/// prediction, or with an unparseable one, count as incorrect.
pub fn score(queries: &[Query], preds: &[Prediction]) -> Result<MetricsReport, EvalError> {
    let known: BTreeMap<&str, &Query> = queries.iter().map(|q| (q.query_id.as_str(), q)).collect();
    let mut by_id: BTreeMap<&str, PredictedAnswer> = BTreeMap::new();
    for p in preds {
        if !known.contains_key(p.query_id.as_str()) {
            return Err(EvalError::UnknownQuery(p.query_id.clone()));
        }
        if by_id.insert(&p.query_id, p.answer).is_some() {
            return Err(EvalError::DuplicatePrediction(p.query_id.clone()));
        }
    }

    let mut total = Tally::default();
    let mut per_order: BTreeMap<u8, Tally> = BTreeMap::new();
    let mut per_prop: BTreeMap<(&str, &str), BTreeMap<u8, Tally>> = BTreeMap::new();
    let mut counts = Counts::default();

    for q in queries {
        let gold = q
            .gold
            .ok_or_else(|| EvalError::MissingGold(q.query_id.clone()))?;
        let predicted = by_id.get(q.query_id.as_str()).and_then(|a| a.answer());
        counts.total += 1;
        if predicted.is_some() {
            counts.answered += 1;
        } else {
            counts.unanswered += 1;
        }
        let correct = predicted == Some(gold);
        total.add(correct);
        per_order.entry(q.order).or_default().add(correct);
        per_prop
            .entry(q.proposition_key())
            .or_default()
            .entry(q.order)
            .or_default()
            .add(correct);
    }

    let all_correct = per_prop
        .values()
        .filter(|orders| orders.values().all(|t| t.correct == t.total))
        .count();
    let consistency = if per_prop.is_empty() {
        0.0
    } else {
        all_correct as f64 / per_prop.len() as f64
    };

    let mut correlations = BTreeMap::new();
    for pair in OrderPair::ALL {
        let (xs, ys): (Vec<f64>, Vec<f64>) = per_prop
            .values()
            .filter_map(|orders| {
                Some((
                    orders.get(&pair.0)?.accuracy(),
                    orders.get(&pair.1)?.accuracy(),
                ))
            })
            .unzip();
        correlations.insert(pair, pearson(&xs, &ys).ok().flatten());
    }

    Ok(MetricsReport {
        total_accuracy: total.accuracy(),
        per_order_accuracy: per_order
            .into_iter()
            .map(|(o, t)| (o, t.accuracy()))
            .collect(),
        consistency,
        correlations,
        counts,
        propositions: per_prop.len(),
        proposition_grouping: "dialog_id+event_id across all anchor turns".to_string(),
    })
}

/// Answer frequencies of a reference (training) set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnswerFrequencies {
    pub p_yes: f64,
    pub p_no: f64,
}

impl AnswerFrequencies {
    pub fn new(p_yes: f64, p_no: f64) -> Result<Self, EvalError> {
        if p_yes < 0.0 || p_no < 0.0 || libm::fabs(p_yes + p_no - 1.0) > 1e-9 {
            return Err(EvalError::InvalidFrequencies {
                yes: p_yes,
                no: p_no,
            });
        }
        Ok(Self { p_yes, p_no })
    }

    pub fn from_counts(yes: u64, no: u64) -> Result<Self, EvalError> {
        let n = (yes + no) as f64;
        if n == 0.0 {
            return Err(EvalError::InvalidFrequencies { yes: 0.0, no: 0.0 });
        }
        Self::new(yes as f64 / n, no as f64 / n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub frequencies: AnswerFrequencies,
    /// `p_yes * q_yes + p_no * q_no` over the scored set.
    pub expected_accuracy: f64,
    pub expected_per_order: BTreeMap<u8, f64>,
    pub trials: u32,
    pub seed: u64,
    pub mean_accuracy: f64,
    pub stddev_accuracy: f64,
    /// `stddev / sqrt(trials)`.
    pub standard_error: f64,
}

fn expected(qs: &[&Query], freqs: AnswerFrequencies) -> f64 {
    let golds: Vec<Answer> = qs.iter().filter_map(|q| q.gold).collect();
    if golds.is_empty() {
        return 0.0;
    }
    let q_yes = golds.iter().filter(|a| a.is_yes()).count() as f64 / golds.len() as f64;
    freqs.p_yes * q_yes + freqs.p_no * (1.0 - q_yes)
}

/// Answers yes with probability `p_yes`, independently per query, and
/// reports the accuracy distribution over `trials` runs together with its
/// closed-form expectation. Queries without gold are skipped.
pub fn random_baseline(
    queries: &[Query],
    freqs: AnswerFrequencies,
    seed: u64,
    trials: u32,
) -> Result<BaselineSummary, EvalError> {
    if trials < 1 {
        return Err(EvalError::NoTrials);
    }
    let scored: Vec<&Query> = queries.iter().filter(|q| q.gold.is_some()).collect();
    let mut orders: BTreeMap<u8, Vec<&Query>> = BTreeMap::new();
    for q in &scored {
        orders.entry(q.order).or_default().push(q);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accs = Vec::with_capacity(trials as usize);
    for _ in 0..trials {
        let correct = scored
            .iter()
            .filter(|q| {
                let guess = Answer::from_bool(rng.gen::<f64>() < freqs.p_yes);
                q.gold == Some(guess)
            })
            .count();
        accs.push(if scored.is_empty() {
            0.0
        } else {
            correct as f64 / scored.len() as f64
        });
    }
    let n = f64::from(trials);
    let mean = accs.iter().sum::<f64>() / n;
    let var = if trials > 1 {
        accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let stddev = libm::sqrt(var);

    Ok(BaselineSummary {
        frequencies: freqs,
        expected_accuracy: expected(&scored, freqs),
        expected_per_order: orders
            .iter()
            .map(|(o, qs)| (*o, expected(qs, freqs)))
            .collect(),
        trials,
        seed,
        mean_accuracy: mean,
        stddev_accuracy: stddev,
        standard_error: stddev / libm::sqrt(n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct YesNo {
    pub yes: usize,
    pub no: usize,
}

/// Gold yes/no tallies per split; every split is present.
pub fn split_counts(queries: &[Query]) -> BTreeMap<Split, YesNo> {
    let mut out: BTreeMap<Split, YesNo> =
        Split::ALL.iter().map(|s| (*s, YesNo::default())).collect();
    for q in queries {
        let slot = out.entry(q.split).or_default();
        match q.gold {
            Some(Answer::Yes) => slot.yes += 1,
            Some(Answer::No) => slot.no += 1,
            None => {}
        }
    }
    out
}
