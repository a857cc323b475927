//! Gold answers on the printed smoking extract and on a synthetic corpus
//! whose answers were computed by an independent reference implementation.

use std::collections::BTreeMap;
use std::path::Path;

use tomcg::io;
use tomcg_core::corpus::Dialog;
use tomcg_core::labels::{Certainty, Speaker};
use tomcg_core::prompt::{build_prompt, PromptSpec, ANCHOR_MARKER, INSTRUCTION};
use tomcg_core::querygen::{build_benchmark, Query};
use tomcg_core::Answer;

fn load(name: &str) -> Vec<Dialog> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name);
    io::parse_corpus(std::fs::File::open(path).unwrap()).unwrap()
}

fn find<'a>(qs: &'a [Query], turn: u32, chain: &[Speaker], c: Certainty) -> &'a Query {
    qs.iter()
        .find(|q| q.anchor_turn == turn && q.chain == chain && q.certainty == c)
        .unwrap()
}

#[test]
fn smoking_extract_questions() {
    let corpus = load("table1.jsonl");
    let set = build_benchmark(&corpus, 1.0, 0).unwrap();
    // Two points (114 introduction, 117 change), 18 queries each.
    assert_eq!(set.queries.len(), 36);
    let turns: Vec<u32> = set.queries.iter().map(|q| q.anchor_turn).collect();
    assert!(turns[..18].iter().all(|t| *t == 114));
    assert!(turns[18..].iter().all(|t| *t == 117));

    let a = [Speaker::A];
    let ba = [Speaker::B, Speaker::A];
    let cn = Certainty::CertainlyNot;
    assert_eq!(find(&set.queries, 114, &a, cn).gold, Some(Answer::No));
    assert_eq!(find(&set.queries, 114, &ba, cn).gold, Some(Answer::No));
    assert_eq!(find(&set.queries, 117, &a, cn).gold, Some(Answer::Yes));
    assert_eq!(find(&set.queries, 117, &ba, cn).gold, Some(Answer::Yes));

    assert_eq!(
        find(&set.queries, 117, &ba, cn).text,
        "At the time indicated, is it the case that B believes that A believes that it is certainly not true that B is now not smoking?"
    );
}

#[test]
fn smoking_extract_prompt() {
    let corpus = load("table1.jsonl");
    let set = build_benchmark(&corpus, 1.0, 0).unwrap();
    let q = find(&set.queries, 117, &[Speaker::A], Certainty::CertainlyNot);
    let spec = PromptSpec {
        context_before: 3,
        context_after: 2,
        ..PromptSpec::default()
    };
    let prompt = build_prompt(q, &corpus[0], &spec).unwrap();
    assert!(prompt.starts_with(INSTRUCTION));
    let conversation: Vec<&str> = prompt
        .split("Conversation:\n")
        .nth(1)
        .unwrap()
        .split("\n\nQuestion:\n")
        .next()
        .unwrap()
        .lines()
        .collect();
    assert_eq!(conversation.len(), 6);
    assert_eq!(conversation[0], "114 | B: Small world %huh?");
    assert_eq!(
        conversation[3],
        format!("117 | B: No. I am smoking. {ANCHOR_MARKER}")
    );
    assert!(prompt.ends_with(&q.text));
}

#[test]
fn synthetic_corpus_matches_reference_gold() {
    let corpus = load("synthetic.jsonl");
    let reference: BTreeMap<&str, &str> = include_str!("fixtures/synthetic_gold.csv")
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap())
        .collect();
    let set = build_benchmark(&corpus, 1.0, 0).unwrap();
    assert_eq!(set.queries.len(), reference.len());
    for q in &set.queries {
        let want = reference[q.query_id.as_str()];
        assert_eq!(q.gold.unwrap().as_str(), want, "{}", q.query_id);
    }
}
