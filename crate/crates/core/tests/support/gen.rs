//! proptest strategies for synthetic annotated dialogs.

#![allow(dead_code)]

use proptest::prelude::*;
use tomcg_core::corpus::{Dialog, EventRow, EventTimeline, Split, Turn};
use tomcg_core::labels::{BeliefLabel, CgLabel, Speaker};

pub fn belief() -> impl Strategy<Value = BeliefLabel> {
    prop::sample::select(BeliefLabel::ALL.to_vec())
}

pub fn cg() -> impl Strategy<Value = CgLabel> {
    prop::sample::select(CgLabel::ALL.to_vec())
}

pub type Labels = (BeliefLabel, BeliefLabel, CgLabel, CgLabel);

pub fn labels() -> impl Strategy<Value = Labels> {
    (belief(), belief(), cg(), cg())
}

/// Labels drawn from a small pool so that consecutive rows often repeat.
pub fn sticky_labels() -> impl Strategy<Value = Vec<Labels>> {
    prop::collection::vec(labels(), 1..4).prop_flat_map(|pool| {
        let n = pool.len();
        prop::collection::vec(0..n, 1..12)
            .prop_map(move |picks| picks.into_iter().map(|i| pool[i]).collect())
    })
}

/// An event whose rows sit on strictly increasing turns within `0..turns`.
pub fn event(id: String, turns: u32) -> impl Strategy<Value = EventTimeline> {
    (
        sticky_labels(),
        prop::collection::btree_set(0..turns, 1..=turns as usize),
    )
        .prop_map(move |(labels, turn_set)| {
            let rows = turn_set
                .into_iter()
                .zip(labels.into_iter().cycle())
                .map(|(turn, (bel_a, bel_b, cg_a, cg_b))| EventRow {
                    turn,
                    bel_a,
                    bel_b,
                    cg_a,
                    cg_b,
                })
                .collect();
            EventTimeline {
                event_id: id.clone(),
                proposition: format!("proposition {id}"),
                rows,
            }
        })
}

pub fn dialog(id: String) -> impl Strategy<Value = Dialog> {
    (4u32..24, prop::sample::select(Split::ALL.to_vec())).prop_flat_map(move |(turns, split)| {
        let id = id.clone();
        let events = (1usize..5).prop_flat_map(move |n| {
            (0..n)
                .map(|i| event(format!("e{i}"), turns))
                .collect::<Vec<_>>()
        });
        events.prop_map(move |events| Dialog {
            dialog_id: id.clone(),
            split,
            turns: (0..turns)
                .map(|i| Turn {
                    index: i,
                    speaker: if i % 2 == 0 { Speaker::A } else { Speaker::B },
                    text: format!("utterance {i}"),
                })
                .collect(),
            events,
        })
    })
}

pub fn corpus() -> impl Strategy<Value = Vec<Dialog>> {
    (1usize..4).prop_flat_map(|n| (0..n).map(|i| dialog(format!("d{i}"))).collect::<Vec<_>>())
}
