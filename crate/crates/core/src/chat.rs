//! Rule-based natural-language understanding for the archive assistant:
//! a fixed keyword decision tree routes each utterance to an intent and
//! slot matching fills its arguments.
//!
//! Routing order:
//! 1. `rate` / `title` → `RateTitle` (title = text after the first colon,
//!    else the text after the last keyword).
//! 2. stats keyword + vocabulary tag → `TagStats`.
//! 3. `show` / `find` / `videos about` + tag → `FindByTag`.
//! 4. anything else → `Help`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::archive::{words, Archive, Metric};
use crate::datapipe::EmbeddingTable;
use crate::headline::{score_headline, HeadlineModel, HeadlineScore};
use crate::Result;

/// Most titles listed by a `FindByTag` reply.
pub const MAX_LISTED: usize = 10;

pub const HELP_TEXT: &str = "I can help you search the video archive. Try:\n\
- show videos about <tag>\n\
- how many views do <tag> videos get? (views, shares or comments)\n\
- rate my title: <your headline>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntentName {
    FindByTag,
    TagStats,
    RateTitle,
    Help,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Matched,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    pub name: IntentName,
    pub slots: BTreeMap<String, String>,
    pub confidence: Confidence,
}

impl Intent {
    fn new(name: IntentName, slots: &[(&str, String)]) -> Self {
        Intent {
            name,
            slots: slots.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            confidence: Confidence::Matched,
        }
    }

    fn help(confidence: Confidence) -> Self {
        Intent {
            name: IntentName::Help,
            slots: BTreeMap::new(),
            confidence,
        }
    }

    pub fn slot(&self, name: &str) -> Option<&str> {
        self.slots.get(name).map(String::as_str)
    }
}

const STATS_WORDS: &[&str] = &["views", "shares", "comments", "stats", "statistics"];
const FIND_WORDS: &[&str] = &["show", "find"];

/// Word spans `(start, end)` of alphanumeric runs in `text`.
fn spans(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, text.len()));
    }
    out
}

fn contains_phrase(ws: &[String], phrase: &[&str]) -> bool {
    ws.windows(phrase.len()).any(|w| w.iter().zip(phrase).all(|(a, b)| a == b))
}

/// Longest vocabulary tag occurring as a whole-word phrase; ties go to the
/// lexicographically smallest tag.
fn match_tag<S: AsRef<str>>(ws: &[String], vocabulary: &[S]) -> Option<String> {
    let mut best: Option<(usize, String)> = None;
    for tag in vocabulary {
        let tag_words = words(tag.as_ref());
        if tag_words.is_empty() {
            continue;
        }
        let phrase: Vec<&str> = tag_words.iter().map(String::as_str).collect();
        if !contains_phrase(ws, &phrase) {
            continue;
        }
        let tag = tag_words.join(" ");
        let len = tag.chars().count();
        let better = match &best {
            None => true,
            Some((l, t)) => len > *l || (len == *l && tag < *t),
        };
        if better {
            best = Some((len, tag));
        }
    }
    best.map(|(_, t)| t)
}

fn title_slot(text: &str) -> String {
    if let Some((_, after)) = text.split_once(':') {
        return after.trim().to_string();
    }
    let keyword_end = spans(text)
        .into_iter()
        .filter(|&(s, e)| matches!(text[s..e].to_lowercase().as_str(), "rate" | "title"))
        .map(|(_, e)| e)
        .next_back()
        .unwrap_or(0);
    text[keyword_end..]
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .trim_end()
        .to_string()
}

/// The words after the last `about` / `tagged`, for tags not in the vocabulary.
fn free_tag(ws: &[String]) -> Option<String> {
    let pos = ws.iter().rposition(|w| w == "about" || w == "tagged")?;
    let rest: Vec<&str> = ws[pos + 1..]
        .iter()
        .map(String::as_str)
        .filter(|w| *w != "videos" && *w != "video")
        .collect();
    (!rest.is_empty()).then(|| rest.join(" "))
}

fn metric_slot(ws: &[String]) -> Metric {
    for w in ws {
        match w.as_str() {
            "views" | "view" => return Metric::Views,
            "shares" | "share" => return Metric::Shares,
            "comments" | "comment" => return Metric::Comments,
            _ => {}
        }
    }
    Metric::Views
}

/// Deterministic, total parse of one utterance.
pub fn parse_utterance<S: AsRef<str>>(text: &str, vocabulary: &[S]) -> Intent {
    let ws = words(text);
    let has = |w: &str| ws.iter().any(|x| x == w);

    if has("rate") || has("title") {
        let title = title_slot(text);
        if title.is_empty() {
            return Intent::help(Confidence::Fallback);
        }
        return Intent::new(IntentName::RateTitle, &[("title", title)]);
    }

    let tag = match_tag(&ws, vocabulary);
    let wants_stats = contains_phrase(&ws, &["how", "many"]) || STATS_WORDS.iter().any(|w| has(w));
    if wants_stats {
        if let Some(tag) = &tag {
            let metric = metric_slot(&ws).name().to_string();
            return Intent::new(IntentName::TagStats, &[("tag", tag.clone()), ("metric", metric)]);
        }
    }

    let wants_list = FIND_WORDS.iter().any(|w| has(w)) || contains_phrase(&ws, &["videos", "about"]);
    if wants_list || wants_stats {
        if let Some(tag) = tag.or_else(|| free_tag(&ws)) {
            let name = if wants_list { IntentName::FindByTag } else { IntentName::TagStats };
            let mut slots = alloc::vec![("tag", tag)];
            if name == IntentName::TagStats {
                slots.push(("metric", metric_slot(&ws).name().to_string()));
            }
            return Intent::new(name, &slots);
        }
    }

    if has("help") {
        return Intent::help(Confidence::Matched);
    }
    Intent::help(Confidence::Fallback)
}

/// Anything that can score a headline for the `RateTitle` intent.
pub trait TitleScorer {
    fn score_title(&self, title: &str) -> Result<HeadlineScore>;
}

/// A trained headline model together with its embeddings.
pub struct HeadlineScorer<'a> {
    pub model: &'a HeadlineModel,
    pub embeddings: &'a EmbeddingTable,
}

impl TitleScorer for HeadlineScorer<'_> {
    fn score_title(&self, title: &str) -> Result<HeadlineScore> {
        score_headline(title, self.model, self.embeddings)
    }
}

fn not_found(tag: &str, archive: &Archive) -> String {
    let mut msg = format!("Sorry, I couldn't find any videos tagged \"{tag}\".");
    let suggestions = archive.query_by_tag(tag).suggestions;
    if !suggestions.is_empty() {
        let _ = write!(msg, " Did you mean: {}?", suggestions.join(", "));
    }
    msg
}

/// Renders the reply for `intent`. Downstream failures become messages.
pub fn respond(intent: &Intent, archive: &Archive, scorer: Option<&dyn TitleScorer>) -> String {
    match intent.name {
        IntentName::Help => HELP_TEXT.to_string(),
        IntentName::FindByTag => {
            let Some(tag) = intent.slot("tag") else {
                return HELP_TEXT.to_string();
            };
            let found = archive.query_by_tag(tag);
            if found.videos.is_empty() {
                return not_found(tag, archive);
            }
            let n = found.videos.len();
            let mut msg = format!("Found {n} video{} tagged \"{tag}\":", if n == 1 { "" } else { "s" });
            for v in found.videos.iter().take(MAX_LISTED) {
                let _ = write!(msg, "\n- {} ({})", v.title, v.video_id);
            }
            if n > MAX_LISTED {
                let _ = write!(msg, "\n...and {} more", n - MAX_LISTED);
            }
            msg
        }
        IntentName::TagStats => {
            let (Some(tag), Some(metric)) = (intent.slot("tag"), intent.slot("metric")) else {
                return HELP_TEXT.to_string();
            };
            match archive.tag_stats(tag, metric) {
                Ok(s) => format!(
                    "Videos tagged \"{}\" ({}): count {}, mean {:.2}, median {:.2}, total {}",
                    s.tag, s.metric, s.count, s.mean, s.median, s.total
                ),
                Err(crate::Error::NoVideos(_)) => not_found(tag, archive),
                Err(e) => format!("Sorry, I couldn't compute those statistics: {e}"),
            }
        }
        IntentName::RateTitle => {
            let Some(title) = intent.slot("title") else {
                return HELP_TEXT.to_string();
            };
            let Some(scorer) = scorer else {
                return "Sorry, headline scoring is not available right now.".to_string();
            };
            match scorer.score_title(title) {
                Ok(score) => {
                    let top: Vec<String> = score
                        .top_tokens(3)
                        .into_iter()
                        .map(|(t, w)| format!("{t} ({w:.2})"))
                        .collect();
                    let mut msg = format!(
                        "Popularity score for \"{title}\": {:.2}. Top words: {}.",
                        score.probability_popular,
                        top.join(", ")
                    );
                    if !score.oov_tokens.is_empty() {
                        let _ = write!(msg, " Unknown words: {}.", score.oov_tokens.join(", "));
                    }
                    msg
                }
                Err(e) => format!("Sorry, I couldn't rate that title: {e}"),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VOCAB: &[&str] = &["cats", "cute cats", "dogs"];

    #[test]
    fn find_by_tag() {
        let i = parse_utterance("show videos about cats", VOCAB);
        assert_eq!(i.name, IntentName::FindByTag);
        assert_eq!(i.slot("tag"), Some("cats"));
        assert_eq!(i.confidence, Confidence::Matched);
    }

    #[test]
    fn longest_tag_wins() {
        let i = parse_utterance("find CUTE cats please", VOCAB);
        assert_eq!(i.slot("tag"), Some("cute cats"));
    }

    #[test]
    fn rate_title_after_colon() {
        let i = parse_utterance("rate my title: Cat Saves Owner", VOCAB);
        assert_eq!(i.name, IntentName::RateTitle);
        assert_eq!(i.slot("title"), Some("Cat Saves Owner"));
        let i = parse_utterance("rate Dog Learns To Skate", VOCAB);
        assert_eq!(i.slot("title"), Some("Dog Learns To Skate"));
    }

    #[test]
    fn stats_with_metric() {
        let i = parse_utterance("How many shares do dogs videos get?", VOCAB);
        assert_eq!(i.name, IntentName::TagStats);
        assert_eq!(i.slot("tag"), Some("dogs"));
        assert_eq!(i.slot("metric"), Some("shares"));
    }

    #[test]
    fn fallback() {
        let i = parse_utterance("asdf qwerty", VOCAB);
        assert_eq!(i.name, IntentName::Help);
        assert_eq!(i.confidence, Confidence::Fallback);
        assert_eq!(parse_utterance("help", VOCAB).confidence, Confidence::Matched);
        assert_eq!(parse_utterance("rate", VOCAB).name, IntentName::Help);
    }
}
