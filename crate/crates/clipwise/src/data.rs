//! Corpus, channel-statistics and embedding loaders.

use std::collections::BTreeMap;
use std::path::Path;

use clipwise_core::datapipe::{ChannelStats, Corpus, EmbeddingTable, VideoRecord};
use clipwise_core::Error as CoreError;
use serde::de::DeserializeOwned;

use crate::error::{read_text, Result};

fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| CoreError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// One [`VideoRecord`] per line; blank lines are skipped.
pub fn parse_corpus(text: &str) -> Result<Corpus> {
    Ok(Corpus::new(parse_jsonl::<VideoRecord>(text)?)?)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    parse_corpus(&read_text(path)?)
}

pub fn write_corpus(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    let mut text = String::new();
    for r in corpus.records() {
        text.push_str(&serde_json::to_string(r).expect("records serialize"));
        text.push('\n');
    }
    crate::error::write(path, text.as_bytes())
}

/// Channel likes keyed by channel id; a repeated channel keeps its last line.
pub fn parse_channel_stats(text: &str) -> Result<BTreeMap<String, u64>> {
    Ok(parse_jsonl::<ChannelStats>(text)?
        .into_iter()
        .map(|c| (c.channel_id, c.likes))
        .collect())
}

pub fn load_channel_stats(path: impl AsRef<Path>) -> Result<BTreeMap<String, u64>> {
    parse_channel_stats(&read_text(path)?)
}

/// Whitespace-separated embedding text file of dimension `dim`.
pub fn load_embeddings(path: impl AsRef<Path>, dim: usize) -> Result<EmbeddingTable> {
    Ok(EmbeddingTable::parse(&read_text(path)?, dim)?)
}

/// Embedding dimension taken from the first non-header line.
pub fn sniff_embedding_dim(path: impl AsRef<Path>) -> Result<usize> {
    let text = read_text(path)?;
    let line = text.lines().find(|l| !l.trim().is_empty()).ok_or(CoreError::EmptyInput)?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    // fastText header: "<count> <dim>".
    if fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok()) {
        return Ok(fields[1].parse().expect("checked"));
    }
    Ok(fields.len() - 1)
}

pub fn write_embeddings(path: impl AsRef<Path>, table: &EmbeddingTable) -> Result<()> {
    let mut text = String::new();
    for tok in table.tokens() {
        text.push_str(tok);
        for v in table.get(tok).expect("listed token") {
            text.push(' ');
            text.push_str(&v.to_string());
        }
        text.push('\n');
    }
    crate::error::write(path, text.as_bytes())
}
