//! Gold yes/no answers for belief questions of order one to three.
//!
//! The resolvers read only the annotation state at the anchor turn. For a
//! chain `[X, Y, ..]` the outermost believer `X` supplies the "first
//! speaker" belief and common ground, `Y` the "second speaker" belief.
//! The second speaker's common ground is never consulted, and the
//! positive-polarity case of the second-order rule ignores `Y`'s belief.
//! Both asymmetries are part of the answer semantics and are kept as is.

use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::{BeliefLabel, Certainty, CgLabel, Speaker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
}

impl Answer {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Answer::Yes
        } else {
            Answer::No
        }
    }

    pub fn is_yes(self) -> bool {
        self == Answer::Yes
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Both participants' labels for one event at one turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AnnotationState {
    pub bel_a: BeliefLabel,
    pub bel_b: BeliefLabel,
    pub cg_a: CgLabel,
    pub cg_b: CgLabel,
}

impl AnnotationState {
    pub fn bel(&self, s: Speaker) -> BeliefLabel {
        match s {
            Speaker::A => self.bel_a,
            Speaker::B => self.bel_b,
        }
    }

    pub fn cg(&self, s: Speaker) -> CgLabel {
        match s {
            Speaker::A => self.cg_a,
            Speaker::B => self.cg_b,
        }
    }

    /// Every combination of the four labels (256 states).
    pub fn all() -> impl Iterator<Item = AnnotationState> {
        BeliefLabel::ALL.into_iter().flat_map(|bel_a| {
            BeliefLabel::ALL.into_iter().flat_map(move |bel_b| {
                CgLabel::ALL.into_iter().flat_map(move |cg_a| {
                    CgLabel::ALL.into_iter().map(move |cg_b| AnnotationState {
                        bel_a,
                        bel_b,
                        cg_a,
                        cg_b,
                    })
                })
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("belief chain is empty")]
    Empty,
    #[error("belief chain of order {0} is outside 1..=3")]
    UnsupportedOrder(usize),
    #[error("belief chain asks about self-belief at position {0}")]
    SelfBelief(usize),
}

/// Checks that a chain has order 1-3 and never repeats a speaker.
pub fn check_chain(chain: &[Speaker]) -> Result<(), ChainError> {
    match chain.len() {
        0 => return Err(ChainError::Empty),
        1..=3 => {}
        n => return Err(ChainError::UnsupportedOrder(n)),
    }
    match chain.windows(2).position(|w| w[0] == w[1]) {
        Some(i) => Err(ChainError::SelfBelief(i + 1)),
        None => Ok(()),
    }
}

/// Whether a question about `qbel` is answered yes by an agent holding
/// `sbel`: equal labels, or a "possibly" question against a certain belief.
pub fn subsumes(qbel: BeliefLabel, sbel: BeliefLabel) -> bool {
    qbel == sbel || (qbel == BeliefLabel::PossiblyTrue && sbel == BeliefLabel::CertainlyTrue)
}

pub fn resolve_first(certainty: Certainty, x: Speaker, state: &AnnotationState) -> Answer {
    Answer::from_bool(subsumes(certainty.as_belief(), state.bel(x)))
}

/// "`outer` believes that `inner` believes that it is {certainty} true".
pub fn resolve_second(
    certainty: Certainty,
    outer: Speaker,
    inner: Speaker,
    state: &AnnotationState,
) -> Answer {
    let qbel = certainty.as_belief();
    let positive = certainty.is_positive()
        && state.cg(outer).is_in_common_ground()
        && subsumes(qbel, state.bel(outer));
    // negative case checks the inner speaker's belief
    let negative = certainty == Certainty::CertainlyNot
        && state.cg(outer) == CgLabel::Rejected
        && qbel == state.bel(inner);
    Answer::from_bool(positive || negative)
}

/// "`outer` believes that the other believes that `outer` believes ...".
pub fn resolve_third(certainty: Certainty, outer: Speaker, state: &AnnotationState) -> Answer {
    let qbel = certainty.as_belief();
    let positive = certainty.is_positive()
        && state.cg(outer).is_in_common_ground()
        && subsumes(qbel, state.bel(outer));
    // negative case checks the outer speaker's own belief and accepts NA
    let negative = certainty == Certainty::CertainlyNot
        && matches!(state.cg(outer), CgLabel::Rejected | CgLabel::NotAnnotated)
        && qbel == state.bel(outer);
    Answer::from_bool(positive || negative)
}

/// Dispatches on the chain's order.
pub fn resolve(
    certainty: Certainty,
    chain: &[Speaker],
    state: &AnnotationState,
) -> Result<Answer, ChainError> {
    check_chain(chain)?;
    Ok(match *chain {
        [x] => resolve_first(certainty, x, state),
        [x, y] => resolve_second(certainty, x, y, state),
        [x, _, _] => resolve_third(certainty, x, state),
        _ => unreachable!("check_chain bounds the order"),
    })
}
