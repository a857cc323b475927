//! Zero-shot prompt rendering and answer parsing.

use alloc::string::String;
use core::fmt::Write;

use thiserror::Error;

use crate::answers::Answer;
use crate::corpus::{timeline_slice, Dialog, UnknownTurnIndex};
use crate::querygen::Query;

pub const INSTRUCTION: &str = "You are a cautious assistant. You carefully follow instructions. \
You are helpful and harmless and you follow ethical guidelines and promote positive behavior. \
Given a conversation, answer a yes or no question without providing any additional information.";

/// Appended to the anchor utterance in the rendered conversation.
pub const ANCHOR_MARKER: &str = "<- at this time";

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub instruction: String,
    pub context_before: usize,
    pub context_after: usize,
    pub temperature: f64,
    /// Not supported; [`build_prompt`] rejects it.
    pub chain_of_thought: bool,
}

impl Default for PromptSpec {
    fn default() -> Self {
        Self {
            instruction: INSTRUCTION.into(),
            context_before: 5,
            context_after: 5,
            temperature: 1.0,
            chain_of_thought: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error(transparent)]
    UnknownAnchor(#[from] UnknownTurnIndex),
    #[error("chain-of-thought prompting is not supported")]
    ChainOfThought,
}

/// Instruction, the conversation window around the anchor turn with the
/// anchor line marked, then the question.
pub fn build_prompt(
    query: &Query,
    dialog: &Dialog,
    spec: &PromptSpec,
) -> Result<String, PromptError> {
    if spec.chain_of_thought {
        return Err(PromptError::ChainOfThought);
    }
    let turns = timeline_slice(
        dialog,
        query.anchor_turn,
        spec.context_before,
        spec.context_after,
    )?;
    let mut out = String::new();
    out.push_str(&spec.instruction);
    out.push_str("\n\nConversation:\n");
    for t in turns {
        let _ = write!(out, "{} | {}: {}", t.index, t.speaker, t.text);
        if t.index == query.anchor_turn {
            out.push(' ');
            out.push_str(ANCHOR_MARKER);
        }
        out.push('\n');
    }
    out.push_str("\nQuestion:\n");
    out.push_str(&query.text);
    Ok(out)
}

/// Case-insensitive yes/no extraction: a leading yes/no wins; otherwise the
/// answer is whichever of the two words appears, if only one does.
pub fn parse_answer(raw: &str) -> Option<Answer> {
    let lower = raw.to_lowercase();
    let mut words = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty());
    let word_answer = |w: &str| match w {
        "yes" => Some(Answer::Yes),
        "no" => Some(Answer::No),
        _ => None,
    };
    let first = words.next()?;
    if let Some(a) = word_answer(first) {
        return Some(a);
    }
    let (mut yes, mut no) = (false, false);
    for w in words {
        match word_answer(w) {
            Some(Answer::Yes) => yes = true,
            Some(Answer::No) => no = true,
            None => {}
        }
    }
    match (yes, no) {
        (true, false) => Some(Answer::Yes),
        (false, true) => Some(Answer::No),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Split, Turn};
    use crate::labels::{Certainty, Speaker};
    use alloc::vec;

    #[test]
    fn parses_answers() {
        assert_eq!(parse_answer("Yes."), Some(Answer::Yes));
        assert_eq!(
            parse_answer("no, A does not believe that"),
            Some(Answer::No)
        );
        assert_eq!(parse_answer("It could be yes or no"), None);
        assert_eq!(parse_answer("  **NO**"), Some(Answer::No));
        assert_eq!(parse_answer("I think the answer is yes"), Some(Answer::Yes));
        assert_eq!(parse_answer("Nobody knows"), None);
        assert_eq!(parse_answer(""), None);
    }

    fn dialog() -> Dialog {
        Dialog {
            dialog_id: "d".into(),
            split: Split::None,
            turns: (1..=4)
                .map(|i| Turn {
                    index: i,
                    speaker: if i % 2 == 1 { Speaker::A } else { Speaker::B },
                    text: alloc::format!("line {i}"),
                })
                .collect(),
            events: vec![],
        }
    }

    fn query(anchor: u32) -> Query {
        Query {
            query_id: "q".into(),
            dialog_id: "d".into(),
            event_id: "e".into(),
            anchor_turn: anchor,
            order: 1,
            chain: vec![Speaker::A],
            certainty: Certainty::Certainly,
            text: "Is it?".into(),
            gold: None,
            split: Split::None,
        }
    }

    #[test]
    fn anchor_only_window() {
        let spec = PromptSpec {
            context_before: 0,
            context_after: 0,
            ..PromptSpec::default()
        };
        let p = build_prompt(&query(2), &dialog(), &spec).unwrap();
        assert!(p.starts_with(INSTRUCTION));
        assert_eq!(
            &p[INSTRUCTION.len()..],
            "\n\nConversation:\n2 | B: line 2 <- at this time\n\nQuestion:\nIs it?"
        );
    }

    #[test]
    fn rejects_cot_and_unknown_anchor() {
        let cot = PromptSpec {
            chain_of_thought: true,
            ..PromptSpec::default()
        };
        assert_eq!(
            build_prompt(&query(2), &dialog(), &cot),
            Err(PromptError::ChainOfThought)
        );
        assert!(matches!(
            build_prompt(&query(9), &dialog(), &PromptSpec::default()),
            Err(PromptError::UnknownAnchor(_))
        ));
    }
}
