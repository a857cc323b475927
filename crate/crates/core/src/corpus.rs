//! Annotated dialogs: turns, per-event annotation timelines and validation.
//!
//! A corpus is exchanged as a flat list of [`CorpusRecord`]s (one per line
//! in the JSONL interchange format). [`assemble`] groups records into
//! [`Dialog`]s and rejects structural errors that make a dialog
//! unrepresentable; [`validate_dialog`] reports the remaining invariant
//! violations as data.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answers::AnnotationState;
use crate::labels::{BeliefLabel, CgLabel, Speaker};

/// Discourse time, measured in turns.
pub type TurnIndex = u32;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    #[default]
    None,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Test, Split::None];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::None => "none",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub index: TurnIndex,
    pub speaker: Speaker,
    pub text: String,
}

/// The four labels annotated for one event at one turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventRow {
    pub turn: TurnIndex,
    pub bel_a: BeliefLabel,
    pub bel_b: BeliefLabel,
    pub cg_a: CgLabel,
    pub cg_b: CgLabel,
}

impl EventRow {
    pub fn state(&self) -> AnnotationState {
        AnnotationState {
            bel_a: self.bel_a,
            bel_b: self.bel_b,
            cg_a: self.cg_a,
            cg_b: self.cg_b,
        }
    }
}

/// One proposition's annotation rows across a dialog.
///
/// Turns without a row inherit the most recent earlier row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTimeline {
    pub event_id: String,
    pub proposition: String,
    pub rows: Vec<EventRow>,
}

impl EventTimeline {
    /// The row in force at `turn`: the latest row at or before it.
    pub fn row_at(&self, turn: TurnIndex) -> Option<&EventRow> {
        self.rows
            .iter()
            .filter(|r| r.turn <= turn)
            .max_by_key(|r| r.turn)
    }

    pub fn state_at(&self, turn: TurnIndex) -> Option<AnnotationState> {
        self.row_at(turn).map(EventRow::state)
    }

    /// First row at which some participant holds a belief about the event.
    ///
    /// Common ground cannot be annotated before this turn.
    pub fn introduction_turn(&self) -> Option<TurnIndex> {
        self.rows
            .iter()
            .filter(|r| r.bel_a != BeliefLabel::NoBelief || r.bel_b != BeliefLabel::NoBelief)
            .map(|r| r.turn)
            .min()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialog {
    pub dialog_id: String,
    pub split: Split,
    pub turns: Vec<Turn>,
    pub events: Vec<EventTimeline>,
}

impl Dialog {
    pub fn turn(&self, index: TurnIndex) -> Option<&Turn> {
        self.turns.iter().find(|t| t.index == index)
    }

    pub fn event(&self, event_id: &str) -> Option<&EventTimeline> {
        self.events.iter().find(|e| e.event_id == event_id)
    }

    /// Flattens the dialog back into interchange records: the metadata
    /// record, then turns, then each event's rows.
    pub fn to_records(&self) -> Vec<CorpusRecord> {
        let mut out = Vec::with_capacity(1 + self.turns.len());
        out.push(CorpusRecord::Dialog {
            dialog_id: self.dialog_id.clone(),
            split: self.split,
        });
        for t in &self.turns {
            out.push(CorpusRecord::Turn {
                dialog_id: self.dialog_id.clone(),
                index: t.index,
                speaker: t.speaker,
                text: t.text.clone(),
            });
        }
        for e in &self.events {
            for r in &e.rows {
                out.push(CorpusRecord::EventRow {
                    dialog_id: self.dialog_id.clone(),
                    event_id: e.event_id.clone(),
                    proposition: e.proposition.clone(),
                    turn: r.turn,
                    bel_a: r.bel_a,
                    bel_b: r.bel_b,
                    cg_a: r.cg_a,
                    cg_b: r.cg_b,
                });
            }
        }
        out
    }
}

/// One line of the corpus interchange format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorpusRecord {
    Dialog {
        dialog_id: String,
        #[serde(default)]
        split: Split,
    },
    Turn {
        dialog_id: String,
        index: TurnIndex,
        speaker: Speaker,
        text: String,
    },
    EventRow {
        dialog_id: String,
        event_id: String,
        proposition: String,
        turn: TurnIndex,
        bel_a: BeliefLabel,
        bel_b: BeliefLabel,
        cg_a: CgLabel,
        cg_b: CgLabel,
    },
}

/// Structural errors that prevent assembling a dialog. `line` is the
/// 1-based position of the offending record.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("line {line}: dialog `{dialog_id}` has duplicate turn index {index}")]
    DuplicateTurn {
        line: usize,
        dialog_id: String,
        index: TurnIndex,
    },
    #[error("line {line}: event `{event_id}` in dialog `{dialog_id}` references nonexistent turn {turn}")]
    UnknownTurn {
        line: usize,
        dialog_id: String,
        event_id: String,
        turn: TurnIndex,
    },
    #[error(
        "line {line}: event `{event_id}` in dialog `{dialog_id}` has conflicting propositions"
    )]
    ConflictingProposition {
        line: usize,
        dialog_id: String,
        event_id: String,
    },
    #[error("line {line}: dialog `{dialog_id}` has conflicting split metadata")]
    ConflictingSplit { line: usize, dialog_id: String },
    #[error("corpus failed validation with {} violation(s)", .0.len())]
    Invalid(Vec<Violation>),
}

#[derive(Default)]
struct DialogBuilder {
    split: Option<Split>,
    turns: Vec<Turn>,
    events: Vec<EventTimeline>,
    // (line, event position, turn) for deferred turn-existence checks
    row_refs: Vec<(usize, usize, TurnIndex)>,
}

/// Groups records into dialogs in order of first appearance.
///
/// Rows and turns keep their record order so that ordering violations
/// remain visible to [`validate_dialog`].
pub fn assemble<I>(records: I) -> Result<Vec<Dialog>, CorpusError>
where
    I: IntoIterator<Item = (usize, CorpusRecord)>,
{
    let mut order: Vec<String> = Vec::new();
    let mut builders: BTreeMap<String, DialogBuilder> = BTreeMap::new();

    for (line, record) in records {
        let id = match &record {
            CorpusRecord::Dialog { dialog_id, .. }
            | CorpusRecord::Turn { dialog_id, .. }
            | CorpusRecord::EventRow { dialog_id, .. } => dialog_id.clone(),
        };
        if !builders.contains_key(&id) {
            order.push(id.clone());
            builders.insert(id.clone(), DialogBuilder::default());
        }
        let b = builders.get_mut(&id).expect("inserted above");
        match record {
            CorpusRecord::Dialog { split, .. } => match b.split {
                Some(existing) if existing != split => {
                    return Err(CorpusError::ConflictingSplit {
                        line,
                        dialog_id: id,
                    })
                }
                _ => b.split = Some(split),
            },
            CorpusRecord::Turn {
                index,
                speaker,
                text,
                ..
            } => {
                if b.turns.iter().any(|t| t.index == index) {
                    return Err(CorpusError::DuplicateTurn {
                        line,
                        dialog_id: id,
                        index,
                    });
                }
                b.turns.push(Turn {
                    index,
                    speaker,
                    text,
                });
            }
            CorpusRecord::EventRow {
                event_id,
                proposition,
                turn,
                bel_a,
                bel_b,
                cg_a,
                cg_b,
                ..
            } => {
                let pos = match b.events.iter().position(|e| e.event_id == event_id) {
                    Some(pos) => {
                        if b.events[pos].proposition != proposition {
                            return Err(CorpusError::ConflictingProposition {
                                line,
                                dialog_id: id,
                                event_id,
                            });
                        }
                        pos
                    }
                    None => {
                        b.events.push(EventTimeline {
                            event_id,
                            proposition,
                            rows: Vec::new(),
                        });
                        b.events.len() - 1
                    }
                };
                b.events[pos].rows.push(EventRow {
                    turn,
                    bel_a,
                    bel_b,
                    cg_a,
                    cg_b,
                });
                b.row_refs.push((line, pos, turn));
            }
        }
    }

    let mut dialogs = Vec::with_capacity(order.len());
    for id in order {
        let b = builders
            .remove(&id)
            .expect("every ordered id has a builder");
        for &(line, pos, turn) in &b.row_refs {
            if !b.turns.iter().any(|t| t.index == turn) {
                return Err(CorpusError::UnknownTurn {
                    line,
                    dialog_id: id,
                    event_id: b.events[pos].event_id.clone(),
                    turn,
                });
            }
        }
        dialogs.push(Dialog {
            dialog_id: id,
            split: b.split.unwrap_or_default(),
            turns: b.turns,
            events: b.events,
        });
    }
    Ok(dialogs)
}

/// Assembles and validates; fails unless every dialog is clean.
pub fn assemble_validated<I>(records: I) -> Result<Vec<Dialog>, CorpusError>
where
    I: IntoIterator<Item = (usize, CorpusRecord)>,
{
    let dialogs = assemble(records)?;
    let violations: Vec<Violation> = dialogs.iter().flat_map(validate_dialog).collect();
    if violations.is_empty() {
        Ok(dialogs)
    } else {
        Err(CorpusError::Invalid(violations))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    NonMonotonicTurnIndex,
    EmptyTurnText,
    DuplicateEventId,
    EmptyEvent,
    DuplicateRowTurn,
    NonMonotonicRowTurn,
    RowTurnMissing,
    CgBeforeIntroduction,
}

impl Rule {
    pub fn describe(self) -> &'static str {
        match self {
            Rule::NonMonotonicTurnIndex => "non-monotonic turn_index",
            Rule::EmptyTurnText => "empty turn text",
            Rule::DuplicateEventId => "duplicate event_id",
            Rule::EmptyEvent => "event without rows",
            Rule::DuplicateRowTurn => "duplicate row turn_index",
            Rule::NonMonotonicRowTurn => "non-monotonic turn_index",
            Rule::RowTurnMissing => "row references missing turn",
            Rule::CgBeforeIntroduction => "CG before introduction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub dialog_id: String,
    pub event_id: Option<String>,
    pub turn: Option<TurnIndex>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dialog `{}`", self.dialog_id)?;
        if let Some(e) = &self.event_id {
            write!(f, ", event `{e}`")?;
        }
        if let Some(t) = self.turn {
            write!(f, ", turn {t}")?;
        }
        write!(f, ": {}", self.rule.describe())
    }
}

/// Lists every invariant violation in `d`; empty iff the dialog is valid.
pub fn validate_dialog(d: &Dialog) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |event_id: Option<&str>, turn: Option<TurnIndex>, rule: Rule| {
        out.push(Violation {
            dialog_id: d.dialog_id.clone(),
            event_id: event_id.map(String::from),
            turn,
            rule,
        })
    };

    for w in d.turns.windows(2) {
        if w[1].index <= w[0].index {
            push(None, Some(w[1].index), Rule::NonMonotonicTurnIndex);
        }
    }
    for t in &d.turns {
        if t.text.trim().is_empty() {
            push(None, Some(t.index), Rule::EmptyTurnText);
        }
    }

    for (i, e) in d.events.iter().enumerate() {
        let id = Some(e.event_id.as_str());
        if d.events[..i].iter().any(|p| p.event_id == e.event_id) {
            push(id, None, Rule::DuplicateEventId);
        }
        if e.rows.is_empty() {
            push(id, None, Rule::EmptyEvent);
            continue;
        }
        for w in e.rows.windows(2) {
            if w[1].turn == w[0].turn {
                push(id, Some(w[1].turn), Rule::DuplicateRowTurn);
            } else if w[1].turn < w[0].turn {
                push(id, Some(w[1].turn), Rule::NonMonotonicRowTurn);
            }
        }
        for r in &e.rows {
            if d.turn(r.turn).is_none() {
                push(id, Some(r.turn), Rule::RowTurnMissing);
            }
        }
        let intro = e.introduction_turn();
        for r in &e.rows {
            let before_intro = intro.is_none_or(|t| r.turn < t);
            let has_cg = r.cg_a != CgLabel::NotAnnotated || r.cg_b != CgLabel::NotAnnotated;
            if before_intro && has_cg {
                push(id, Some(r.turn), Rule::CgBeforeIntroduction);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dialog `{dialog_id}` has no turn {turn}")]
pub struct UnknownTurnIndex {
    pub dialog_id: String,
    pub turn: TurnIndex,
}

/// The anchor turn plus up to `before` preceding and `after` following
/// turns, clipped at the dialog boundaries.
///
/// Assumes the dialog's turns are in discourse order (a validated dialog).
pub fn timeline_slice(
    d: &Dialog,
    turn: TurnIndex,
    before: usize,
    after: usize,
) -> Result<&[Turn], UnknownTurnIndex> {
    let pos = d
        .turns
        .iter()
        .position(|t| t.index == turn)
        .ok_or_else(|| UnknownTurnIndex {
            dialog_id: d.dialog_id.clone(),
            turn,
        })?;
    let lo = pos.saturating_sub(before);
    let hi = pos.saturating_add(after).min(d.turns.len() - 1);
    Ok(&d.turns[lo..=hi])
}
