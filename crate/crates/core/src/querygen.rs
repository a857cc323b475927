//! Belief questions instantiated at every point of interest.
//!
//! Each point yields 18 queries: six alternating belief chains (two per
//! order) times three certainties. Points whose state is the uninteresting
//! majority case (CT+ and JA for both speakers) can be down-sampled.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answers::{self, AnnotationState, Answer, ChainError};
use crate::cogstate::{detect_points, PointOfInterest};
use crate::corpus::{Dialog, EventTimeline, Split, TurnIndex};
use crate::labels::{BeliefLabel, Certainty, CgLabel, Speaker};

/// Every chain queried at a point, ordered by order then outer speaker.
pub const CHAINS: [&[Speaker]; 6] = [
    &[Speaker::A],
    &[Speaker::B],
    &[Speaker::A, Speaker::B],
    &[Speaker::B, Speaker::A],
    &[Speaker::A, Speaker::B, Speaker::A],
    &[Speaker::B, Speaker::A, Speaker::B],
];

/// One line of a benchmark file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub dialog_id: String,
    pub event_id: String,
    pub anchor_turn: TurnIndex,
    pub order: u8,
    pub chain: Vec<Speaker>,
    pub certainty: Certainty,
    #[serde(rename = "question")]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Answer>,
    #[serde(default)]
    pub split: Split,
}

impl Query {
    /// `(dialog_id, event_id)`, the grouping key for per-proposition metrics.
    pub fn proposition_key(&self) -> (&str, &str) {
        (&self.dialog_id, &self.event_id)
    }
}

pub fn query_id(
    dialog_id: &str,
    event_id: &str,
    anchor_turn: TurnIndex,
    chain: &[Speaker],
    certainty: Certainty,
) -> String {
    let letters: String = chain.iter().map(|s| s.as_str()).collect();
    format!("{dialog_id}/{event_id}/{anchor_turn}/{letters}/{certainty}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Content hash of the corpus the set was built from, when known.
    pub corpus_digest: Option<String>,
    pub seed: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub queries: Vec<Query>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryGenError {
    #[error("sampling rate {0} is outside [0, 1]")]
    InvalidRate(f64),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("query `{query_id}`: unknown dialog `{dialog_id}`")]
    UnknownDialog { query_id: String, dialog_id: String },
    #[error("query `{query_id}`: unknown event `{event_id}`")]
    UnknownEvent { query_id: String, event_id: String },
    #[error("query `{query_id}`: event has no annotation at or before turn {turn}")]
    NoStateAtAnchor { query_id: String, turn: TurnIndex },
    #[error("query `{query_id}`: order {order} does not match a chain of length {len}")]
    OrderMismatch {
        query_id: String,
        order: u8,
        len: usize,
    },
}

/// "At the time indicated, is it the case that X believes that ... it is
/// {certainty} true that {proposition}?"
pub fn render_question(
    chain: &[Speaker],
    certainty: Certainty,
    proposition: &str,
) -> Result<String, ChainError> {
    answers::check_chain(chain)?;
    let mut s = String::from("At the time indicated, is it the case that ");
    for speaker in chain {
        s.push_str(speaker.as_str());
        s.push_str(" believes that ");
    }
    s.push_str("it is ");
    s.push_str(certainty.as_str());
    s.push_str(" true that ");
    s.push_str(proposition);
    s.push('?');
    Ok(s)
}

/// All 18 queries for one point, gold resolved from the state in force at
/// the point's turn.
pub fn generate_for_point(
    dialog: &Dialog,
    event: &EventTimeline,
    point: &PointOfInterest,
) -> Vec<Query> {
    let state = event.state_at(point.turn_index).unwrap_or(point.state);
    let mut out = Vec::with_capacity(CHAINS.len() * Certainty::ALL.len());
    for chain in CHAINS {
        for certainty in Certainty::ALL {
            let text = render_question(chain, certainty, &event.proposition)
                .expect("fixed chains are valid");
            let gold = answers::resolve(certainty, chain, &state).expect("fixed chains are valid");
            out.push(Query {
                query_id: query_id(
                    &dialog.dialog_id,
                    &event.event_id,
                    point.turn_index,
                    chain,
                    certainty,
                ),
                dialog_id: dialog.dialog_id.clone(),
                event_id: event.event_id.clone(),
                anchor_turn: point.turn_index,
                order: chain.len() as u8,
                chain: chain.to_vec(),
                certainty,
                text,
                gold: Some(gold),
                split: dialog.split,
            });
        }
    }
    out
}

/// CT+ and JA for both speakers.
pub fn is_majority(state: &AnnotationState) -> bool {
    state.bel_a == BeliefLabel::CertainlyTrue
        && state.bel_b == BeliefLabel::CertainlyTrue
        && state.cg_a == CgLabel::JustAdded
        && state.cg_b == CgLabel::JustAdded
}

/// A point together with the dialog and event it belongs to.
#[derive(Debug, Clone)]
pub struct ScopedPoint<'a> {
    pub dialog: &'a Dialog,
    pub event: &'a EventTimeline,
    pub point: PointOfInterest,
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in *part {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        // separator so ("ab","c") and ("a","bc") differ
        h ^= 0xff;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// The generator for one point: the master seed, on a stream derived from
/// the point's identity, so the draw does not depend on iteration order.
fn point_rng(seed: u64, dialog_id: &str, event_id: &str, turn: TurnIndex) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(&[
        dialog_id.as_bytes(),
        event_id.as_bytes(),
        &turn.to_le_bytes(),
    ]));
    rng
}

/// Keeps each majority point with probability `rate`; other points are
/// always kept.
pub fn sample_majority<'a>(
    points: Vec<ScopedPoint<'a>>,
    rate: f64,
    seed: u64,
) -> Result<Vec<ScopedPoint<'a>>, QueryGenError> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(QueryGenError::InvalidRate(rate));
    }
    Ok(points
        .into_iter()
        .filter(|p| {
            if !is_majority(&p.point.state) {
                return true;
            }
            let mut rng = point_rng(
                seed,
                &p.dialog.dialog_id,
                &p.event.event_id,
                p.point.turn_index,
            );
            rng.gen::<f64>() < rate
        })
        .collect())
}

/// Points of interest, sampling and question generation over a corpus.
pub fn build_benchmark(corpus: &[Dialog], rate: f64, seed: u64) -> Result<QuerySet, QueryGenError> {
    let points: Vec<ScopedPoint<'_>> = corpus
        .iter()
        .flat_map(|dialog| {
            dialog.events.iter().flat_map(move |event| {
                detect_points(event)
                    .into_iter()
                    .map(move |point| ScopedPoint {
                        dialog,
                        event,
                        point,
                    })
            })
        })
        .collect();
    let kept = sample_majority(points, rate, seed)?;
    let queries = kept
        .iter()
        .flat_map(|p| generate_for_point(p.dialog, p.event, &p.point))
        .collect();
    Ok(QuerySet {
        queries,
        provenance: Provenance {
            corpus_digest: None,
            seed,
            rate,
        },
    })
}

/// Recomputes `query.gold` from the corpus annotation at its anchor turn.
pub fn fill_gold(queries: &mut [Query], corpus: &[Dialog]) -> Result<(), QueryGenError> {
    for q in queries.iter_mut() {
        q.gold = Some(resolve_gold(q, corpus)?);
    }
    Ok(())
}

pub fn resolve_gold(q: &Query, corpus: &[Dialog]) -> Result<Answer, QueryGenError> {
    if usize::from(q.order) != q.chain.len() {
        return Err(QueryGenError::OrderMismatch {
            query_id: q.query_id.clone(),
            order: q.order,
            len: q.chain.len(),
        });
    }
    let dialog = corpus
        .iter()
        .find(|d| d.dialog_id == q.dialog_id)
        .ok_or_else(|| QueryGenError::UnknownDialog {
            query_id: q.query_id.clone(),
            dialog_id: q.dialog_id.clone(),
        })?;
    let event = dialog
        .event(&q.event_id)
        .ok_or_else(|| QueryGenError::UnknownEvent {
            query_id: q.query_id.clone(),
            event_id: q.event_id.clone(),
        })?;
    let state = event
        .state_at(q.anchor_turn)
        .ok_or_else(|| QueryGenError::NoStateAtAnchor {
            query_id: q.query_id.clone(),
            turn: q.anchor_turn,
        })?;
    Ok(answers::resolve(q.certainty, &q.chain, &state)?)
}
