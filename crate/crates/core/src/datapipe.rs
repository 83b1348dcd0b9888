//! Corpus records, popularity normalization and labeling, dataset splits,
//! category de-biasing and embedding tables.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::stats;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Category {
    pub tier1: String,
    pub tier2: String,
}

impl Category {
    pub fn new(tier1: impl Into<String>, tier2: impl Into<String>) -> Self {
        Category {
            tier1: tier1.into(),
            tier2: tier2.into(),
        }
    }
}

/// One archived video, one JSON object per corpus line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub title: String,
    pub channel_id: String,
    pub views: u64,
    pub category: Category,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features_path: Option<String>,
    pub published_at: DateTime<Utc>,
    #[serde(default)]
    pub shares: u64,
    #[serde(default)]
    pub comments: u64,
    /// Likes of the publishing channel, when inlined instead of joined.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_likes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub channel_id: String,
    pub likes: u64,
}

/// Records with nonempty, unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    records: Vec<VideoRecord>,
}

impl Corpus {
    pub fn new(records: Vec<VideoRecord>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &records {
            if r.video_id.is_empty() {
                return Err(Error::config("video_id must be nonempty"));
            }
            if !seen.insert(r.video_id.as_str()) {
                return Err(Error::config(format!("duplicate video_id {}", r.video_id)));
            }
        }
        Ok(Corpus { records })
    }

    pub fn records(&self) -> &[VideoRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, video_id: &str) -> Option<&VideoRecord> {
        self.records.iter().find(|r| r.video_id == video_id)
    }
}

/// Views divided by the likes of the publishing channel.
pub fn normalize_views(views: u64, likes: u64) -> Result<f64> {
    if likes == 0 {
        return Err(Error::MissingChannelStats("channel has zero likes".into()));
    }
    Ok(views as f64 / likes as f64)
}

/// Normalized view count of every record, in corpus order. Inlined
/// `channel_likes` wins over the `channels` table.
pub fn normalized_scores(corpus: &Corpus, channels: &BTreeMap<String, u64>) -> Result<Vec<f64>> {
    corpus
        .records()
        .iter()
        .map(|r| {
            let likes = r
                .channel_likes
                .or_else(|| channels.get(&r.channel_id).copied())
                .ok_or_else(|| Error::MissingChannelStats(r.channel_id.clone()))?;
            normalize_views(r.views, likes).map_err(|_| Error::MissingChannelStats(r.channel_id.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Unpopular,
    Popular,
}

impl Label {
    pub fn as_class(self) -> usize {
        match self {
            Label::Unpopular => 0,
            Label::Popular => 1,
        }
    }

    pub fn from_class(c: usize) -> Self {
        if c == 1 {
            Label::Popular
        } else {
            Label::Unpopular
        }
    }
}

/// Labels each score popular iff it is strictly above the median.
pub fn label_by_median(scores: &[f64]) -> Result<(Vec<Label>, f64)> {
    let median = stats::median(scores).map_err(|_| Error::EmptyDataset)?;
    let labels = scores
        .iter()
        .map(|&s| if s > median { Label::Popular } else { Label::Unpopular })
        .collect();
    Ok((labels, median))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub record: VideoRecord,
    pub normalized_score: f64,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    pub examples: Vec<LabeledExample>,
    pub median_used: f64,
}

impl LabeledCorpus {
    pub fn build(corpus: &Corpus, channels: &BTreeMap<String, u64>) -> Result<Self> {
        let scores = normalized_scores(corpus, channels)?;
        let (labels, median_used) = label_by_median(&scores)?;
        let examples = corpus
            .records()
            .iter()
            .zip(scores)
            .zip(labels)
            .map(|((record, normalized_score), label)| LabeledExample {
                record: record.clone(),
                normalized_score,
                label,
            })
            .collect();
        Ok(LabeledCorpus { examples, median_used })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const STANDARD: SplitRatios = SplitRatios {
        train: 0.8,
        val: 0.1,
        test: 0.1,
    };

    pub fn new(train: f64, val: f64, test: f64) -> Self {
        SplitRatios { train, val, test }
    }

    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::config(format!("split ratios must be nonnegative: {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("split ratios must sum to 1: {parts:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded shuffle, then `val` and `test` take `floor(n · ratio)` items each
/// and `train` takes the remainder.
pub fn split_dataset<T: Clone>(items: &[T], ratios: SplitRatios, seed: u64) -> Result<Split<T>> {
    ratios.validate()?;
    let n = items.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // 1e-9 absorbs representation error such as 0.1 * 70 = 7.000000000000001.
    let cut = |r: f64| crate::math::floor(n as f64 * r + 1e-9) as usize;
    let n_val = cut(ratios.val).min(n);
    let n_test = cut(ratios.test).min(n - n_val);
    let n_train = n - n_val - n_test;
    let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect::<Vec<_>>();
    Ok(Split {
        train: pick(&order[..n_train]),
        val: pick(&order[n_train..n_train + n_val]),
        test: pick(&order[n_train + n_val..]),
    })
}

/// Divides each score by the median score of its tier-1 category.
/// Output order matches input order.
pub fn category_normalize<S: AsRef<str>>(items: &[(S, f64)]) -> Result<Vec<f64>> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (cat, score) in items {
        groups.entry(cat.as_ref()).or_default().push(*score);
    }
    let mut medians = BTreeMap::new();
    for (cat, scores) in &groups {
        let m = stats::median(scores)?;
        if m <= 0.0 || m.is_nan() {
            return Err(Error::DegenerateCategory(cat.to_string()));
        }
        medians.insert(*cat, m);
    }
    Ok(items.iter().map(|(cat, s)| s / medians[cat.as_ref()]).collect())
}

/// Token → fixed-dimension vector table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    dim: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("embedding dimension must be positive"));
        }
        Ok(EmbeddingTable {
            dim,
            entries: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::shape(format!(
                "embedding has {} components, table dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        self.entries.insert(token.into(), vector);
        Ok(())
    }

    /// Parses whitespace-delimited `token v1 … vd` lines. A leading
    /// `count dim` header line (fastText `.vec` style) is accepted and its
    /// dimension is checked against `expected_dim`. Blank lines are ignored.
    /// Line numbers in errors are 1-based.
    pub fn parse(text: &str, expected_dim: usize) -> Result<Self> {
        let mut table = EmbeddingTable::new(expected_dim)?;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if lineno == 1 && expected_dim != 1 && fields.len() == 2 {
                if let (Ok(_), Ok(dim)) = (fields[0].parse::<u64>(), fields[1].parse::<usize>()) {
                    if dim != expected_dim {
                        return Err(Error::config(format!(
                            "embedding file declares dimension {dim}, expected {expected_dim}"
                        )));
                    }
                    continue;
                }
            }
            let format_err = |message: String| Error::Format { line: lineno, message };
            if fields.len() != expected_dim + 1 {
                return Err(format_err(format!(
                    "expected token and {expected_dim} values, found {} fields",
                    fields.len()
                )));
            }
            let vector = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| format_err("non-numeric or non-finite value".into()))?;
            if table.entries.insert(fields[0].to_string(), vector).is_some() {
                return Err(format_err(format!("duplicate token {}", fields[0])));
            }
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    /// The vector for `token`, or the zero vector and `true` when out of vocabulary.
    pub fn lookup(&self, token: &str) -> (Vec<f64>, bool) {
        match self.entries.get(token) {
            Some(v) => (v.clone(), false),
            None => (vec![0.0; self.dim], true),
        }
    }

    /// Mean of the token vectors; OOV tokens contribute zero vectors.
    pub fn mean_vector<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        if tokens.is_empty() {
            return acc;
        }
        for t in tokens {
            if let Some(v) = self.get(t.as_ref()) {
                acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
            }
        }
        acc.iter_mut().for_each(|a| *a /= tokens.len() as f64);
        acc
    }

    /// Tokens in sorted order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}
