//! Common ground from belief pairs, and the points of interest in an
//! event's timeline.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answers::AnnotationState;
use crate::corpus::{EventRow, EventTimeline, TurnIndex};
use crate::labels::{BeliefLabel, CgLabel};

/// The heuristic that produced an inference, in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgRule {
    /// Either belief is CT-: rejected.
    EitherDisbelieves,
    /// CT+/CT+: JA or IN.
    BothCertain,
    /// PS/CT+: JA or IN.
    PossibleCertain,
    /// CT+/PS: JA or IN.
    CertainPossible,
    /// Either belief is NB: no common ground.
    EitherNoBelief,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CgInference {
    /// `None` when no common ground is inferred.
    pub cg: Option<CgLabel>,
    /// The label is JA-or-IN; see [`resolve_ja_in`].
    pub ja_in_underdetermined: bool,
    /// `None` when no rule matched (PS/PS).
    pub rule: Option<CgRule>,
}

impl CgInference {
    pub fn diagnostic(&self) -> Option<&'static str> {
        match self.rule {
            None => Some("no common ground rule matches this belief pair"),
            Some(_) => None,
        }
    }

    /// The label written to the corpus format, where "none" is NA.
    pub fn as_label(&self) -> CgLabel {
        self.cg.unwrap_or(CgLabel::NotAnnotated)
    }
}

/// Maps a belief pair to common ground, applying the rules in order with
/// earlier rules taking precedence.
pub fn infer_cg(bel_a: BeliefLabel, bel_b: BeliefLabel) -> CgInference {
    use BeliefLabel::*;

    let (rule, cg) = if bel_a == CertainlyNotTrue || bel_b == CertainlyNotTrue {
        (Some(CgRule::EitherDisbelieves), Some(CgLabel::Rejected))
    } else if bel_a == CertainlyTrue && bel_b == CertainlyTrue {
        (Some(CgRule::BothCertain), Some(CgLabel::JustAdded))
    } else if bel_a == PossiblyTrue && bel_b == CertainlyTrue {
        (Some(CgRule::PossibleCertain), Some(CgLabel::JustAdded))
    } else if bel_a == CertainlyTrue && bel_b == PossiblyTrue {
        (Some(CgRule::CertainPossible), Some(CgLabel::JustAdded))
    } else if bel_a == NoBelief || bel_b == NoBelief {
        (Some(CgRule::EitherNoBelief), None)
    } else {
        (None, None)
    };
    CgInference {
        cg,
        ja_in_underdetermined: matches!(
            rule,
            Some(CgRule::BothCertain | CgRule::PossibleCertain | CgRule::CertainPossible)
        ),
        rule,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CogStateError {
    #[error("event `{event_id}` has no row at turn {turn}")]
    TurnNotInTimeline { event_id: String, turn: TurnIndex },
    #[error("inference is not JA-or-IN underdetermined")]
    NotUnderdetermined,
}

/// Picks JA for the event's first JA-or-IN turn and IN for every later one.
pub fn resolve_ja_in(
    inference: &CgInference,
    event: &EventTimeline,
    turn: TurnIndex,
) -> Result<CgLabel, CogStateError> {
    if !inference.ja_in_underdetermined {
        return Err(CogStateError::NotUnderdetermined);
    }
    if !event.rows.iter().any(|r| r.turn == turn) {
        return Err(CogStateError::TurnNotInTimeline {
            event_id: event.event_id.clone(),
            turn,
        });
    }
    let first = event
        .rows
        .iter()
        .filter(|r| infer_cg(r.bel_a, r.bel_b).ja_in_underdetermined)
        .map(|r| r.turn)
        .min();
    Ok(if first == Some(turn) {
        CgLabel::JustAdded
    } else {
        CgLabel::AlreadyIn
    })
}

/// Where the inferred common ground of one row disagrees with its labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CgDivergence {
    pub event_id: String,
    pub turn: TurnIndex,
    pub bel_a: BeliefLabel,
    pub bel_b: BeliefLabel,
    pub gold_cg_a: CgLabel,
    pub gold_cg_b: CgLabel,
    pub inferred: CgLabel,
    pub rule: Option<CgRule>,
}

/// Result of replacing an event's common ground labels with inferred ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferredTimeline {
    pub event: EventTimeline,
    pub divergences: Vec<CgDivergence>,
    /// Turns whose belief pair matched no rule.
    pub unmatched: Vec<TurnIndex>,
}

/// Infers common ground for every row of `event`; both participants receive
/// the same label.
pub fn infer_timeline(event: &EventTimeline) -> InferredTimeline {
    let first_positive = event
        .rows
        .iter()
        .filter(|r| infer_cg(r.bel_a, r.bel_b).ja_in_underdetermined)
        .map(|r| r.turn)
        .min();
    let mut divergences = Vec::new();
    let mut unmatched = Vec::new();
    let rows = event
        .rows
        .iter()
        .map(|r| {
            let inf = infer_cg(r.bel_a, r.bel_b);
            if inf.rule.is_none() {
                unmatched.push(r.turn);
            }
            let cg = if inf.ja_in_underdetermined {
                if first_positive == Some(r.turn) {
                    CgLabel::JustAdded
                } else {
                    CgLabel::AlreadyIn
                }
            } else {
                inf.as_label()
            };
            if cg != r.cg_a || cg != r.cg_b {
                divergences.push(CgDivergence {
                    event_id: event.event_id.clone(),
                    turn: r.turn,
                    bel_a: r.bel_a,
                    bel_b: r.bel_b,
                    gold_cg_a: r.cg_a,
                    gold_cg_b: r.cg_b,
                    inferred: cg,
                    rule: inf.rule,
                });
            }
            EventRow {
                cg_a: cg,
                cg_b: cg,
                ..*r
            }
        })
        .collect();
    InferredTimeline {
        event: EventTimeline {
            event_id: event.event_id.clone(),
            proposition: event.proposition.clone(),
            rows,
        },
        divergences,
        unmatched,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Introduction,
    Change,
}

/// A turn at which queries are anchored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointOfInterest {
    pub event_id: String,
    pub turn_index: TurnIndex,
    pub kind: PointKind,
    pub state: AnnotationState,
}

/// The first row (introduction) and every row whose labels differ from the
/// previous row (change), in turn order.
pub fn detect_points(event: &EventTimeline) -> Vec<PointOfInterest> {
    let mut out: Vec<PointOfInterest> = Vec::new();
    let mut prev: Option<AnnotationState> = None;
    for r in &event.rows {
        let state = r.state();
        let kind = match prev {
            None => PointKind::Introduction,
            Some(p) if p != state => PointKind::Change,
            Some(_) => continue,
        };
        out.push(PointOfInterest {
            event_id: event.event_id.clone(),
            turn_index: r.turn,
            kind,
            state,
        });
        prev = Some(state);
    }
    out
}
