use std::collections::BTreeMap;
use std::path::PathBuf;

use clipwise_core::archive::{words, Archive};
use clipwise_core::chat::{parse_utterance, respond, Confidence, IntentName, TitleScorer};
use clipwise_core::datapipe::{Corpus, VideoRecord};
use clipwise_core::headline::HeadlineScore;
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    text: String,
    intent: IntentName,
    slots: BTreeMap<String, String>,
    confidence: Confidence,
}

/// Deterministic scorer: longer words weigh more, words with digits are unknown.
struct StubScorer;

impl TitleScorer for StubScorer {
    fn score_title(&self, title: &str) -> clipwise_core::Result<HeadlineScore> {
        let ws = words(title);
        let total: usize = ws.iter().map(|w| w.len()).sum();
        Ok(HeadlineScore {
            probability_popular: 0.1 * ws.len() as f64,
            contributions: ws.iter().map(|w| (w.clone(), w.len() as f64 / total as f64)).collect(),
            oov_tokens: ws.iter().filter(|w| w.chars().any(|c| c.is_ascii_digit())).cloned().collect(),
        })
    }
}

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/chat")
}

fn archive() -> Archive {
    let text = std::fs::read_to_string(fixture_dir().join("archive.jsonl")).unwrap();
    let records: Vec<VideoRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    Archive::new(Corpus::new(records).unwrap())
}

fn cases() -> Vec<Case> {
    serde_json::from_str(&std::fs::read_to_string(fixture_dir().join("utterances.json")).unwrap()).unwrap()
}

#[test]
fn fixture_intents_and_slots() {
    let archive = archive();
    let vocab: Vec<&str> = archive.index().vocabulary().collect();
    let cases = cases();
    assert_eq!(cases.len(), 20);
    for c in &cases {
        let got = parse_utterance(&c.text, &vocab);
        assert_eq!((got.name, &got.slots, got.confidence), (c.intent, &c.slots, c.confidence), "{:?}", c.text);
    }
    let intents: std::collections::BTreeSet<String> = cases.iter().map(|c| format!("{:?}", c.intent)).collect();
    assert_eq!(intents.len(), 4);
}

/// Set `CLIPWISE_BLESS=1` to rewrite the golden replies.
#[test]
fn fixture_replies_match_golden_files() {
    let archive = archive();
    let vocab: Vec<&str> = archive.index().vocabulary().collect();
    let bless = std::env::var_os("CLIPWISE_BLESS").is_some();
    for (i, c) in cases().iter().enumerate() {
        let reply = respond(&parse_utterance(&c.text, &vocab), &archive, Some(&StubScorer));
        let path = fixture_dir().join(format!("replies/{:02}.txt", i + 1));
        if bless {
            std::fs::write(&path, &reply).unwrap();
            continue;
        }
        let golden = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(reply.as_bytes(), golden.as_slice(), "reply {} for {:?}", i + 1, c.text);
    }
}

#[test]
fn rate_title_without_scorer() {
    let intent = parse_utterance("rate my title: Hello", &[] as &[&str]);
    assert_eq!(respond(&intent, &Archive::default(), None), "Sorry, headline scoring is not available right now.");
}

proptest! {
    #[test]
    fn parsing_is_total_and_deterministic(text in "\\PC{0,60}") {
        let vocab = ["cats", "cute cats", "dogs"];
        let a = parse_utterance(&text, &vocab);
        prop_assert_eq!(&a, &parse_utterance(&text, &vocab));
        let reply = respond(&a, &archive(), Some(&StubScorer));
        prop_assert!(!reply.is_empty());
    }
}
