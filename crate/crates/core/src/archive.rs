//! Tag index over the archive, per-tag interaction statistics and the
//! two-tier topic classifier over averaged text embeddings.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datapipe::{Category, Corpus, EmbeddingTable, VideoRecord};
use crate::nnkern::ops::{relu, softmax, softmax_cross_entropy};
use crate::nnkern::params::prefixed;
use crate::nnkern::{Classifier, Dense, Differentiable, Init, KinkProbe, Parameterized, Tensor};
use crate::stats;
use crate::{Error, Result};

/// Dimension of the text embeddings the topic classifier consumes.
pub const TOPIC_EMBEDDING_DIM: usize = 400;
/// Largest edit distance offered as a tag suggestion.
pub const SUGGESTION_DISTANCE: usize = 2;
pub const MAX_SUGGESTIONS: usize = 3;

/// Lowercased tag → sorted, deduplicated video ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TagIndex {
    tags: BTreeMap<String, Vec<String>>,
}

fn normalize_tag(tag: &str) -> Option<String> {
    let t = tag.trim().to_lowercase();
    (!t.is_empty()).then_some(t)
}

pub fn build_tag_index(corpus: &Corpus) -> TagIndex {
    let mut tags: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in corpus.records() {
        for t in r.tags.iter().filter_map(|t| normalize_tag(t)) {
            tags.entry(t).or_default().insert(r.video_id.clone());
        }
    }
    TagIndex {
        tags: tags.into_iter().map(|(t, ids)| (t, ids.into_iter().collect())).collect(),
    }
}

impl TagIndex {
    pub fn ids(&self, tag: &str) -> Option<&[String]> {
        self.tags.get(&tag.trim().to_lowercase()).map(Vec::as_slice)
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.tags.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Up to three indexed tags within edit distance 2, nearest first.
    pub fn suggestions(&self, tag: &str) -> Vec<String> {
        let needle = tag.trim().to_lowercase();
        let mut near: Vec<(usize, &String)> = self
            .tags
            .keys()
            .filter_map(|t| {
                let d = levenshtein(&needle, t);
                (d <= SUGGESTION_DISTANCE).then_some((d, t))
            })
            .collect();
        near.sort();
        near.into_iter().take(MAX_SUGGESTIONS).map(|(_, t)| t.clone()).collect()
    }
}

/// Edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Views,
    Shares,
    Comments,
}

impl Metric {
    pub fn of(self, r: &VideoRecord) -> u64 {
        match self {
            Metric::Views => r.views,
            Metric::Shares => r.shares,
            Metric::Comments => r.comments,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Views => "views",
            Metric::Shares => "shares",
            Metric::Comments => "comments",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "views" => Ok(Metric::Views),
            "shares" => Ok(Metric::Shares),
            "comments" => Ok(Metric::Comments),
            other => Err(Error::config(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagStats {
    pub tag: String,
    pub metric: Metric,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagQuery<'a> {
    pub videos: Vec<&'a VideoRecord>,
    pub suggestions: Vec<String>,
}

/// A corpus together with its tag index. Rebuilding replaces both.
#[derive(Debug, Clone, Default)]
pub struct Archive {
    corpus: Corpus,
    index: TagIndex,
    by_id: BTreeMap<String, usize>,
}

impl Archive {
    pub fn new(corpus: Corpus) -> Self {
        let index = build_tag_index(&corpus);
        let by_id = corpus
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| (r.video_id.clone(), i))
            .collect();
        Archive { corpus, index, by_id }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn index(&self) -> &TagIndex {
        &self.index
    }

    fn record(&self, id: &str) -> &VideoRecord {
        &self.corpus.records()[self.by_id[id]]
    }

    /// Case-insensitive exact tag match; unknown tags come back empty with
    /// edit-distance suggestions.
    pub fn query_by_tag(&self, tag: &str) -> TagQuery<'_> {
        match self.index.ids(tag) {
            Some(ids) => TagQuery {
                videos: ids.iter().map(|id| self.record(id)).collect(),
                suggestions: Vec::new(),
            },
            None => TagQuery {
                videos: Vec::new(),
                suggestions: self.index.suggestions(tag),
            },
        }
    }

    pub fn tag_stats(&self, tag: &str, metric: &str) -> Result<TagStats> {
        let metric: Metric = metric.parse()?;
        self.tag_stats_for(tag, metric)
    }

    pub fn tag_stats_for(&self, tag: &str, metric: Metric) -> Result<TagStats> {
        let ids = self.index.ids(tag).ok_or_else(|| Error::NoVideos(tag.to_string()))?;
        let values: Vec<u64> = ids.iter().map(|id| metric.of(self.record(id))).collect();
        let as_f64: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        Ok(TagStats {
            tag: tag.trim().to_lowercase(),
            metric,
            count: values.len(),
            mean: stats::mean(&as_f64)?,
            median: stats::median(&as_f64)?,
            total: values.iter().sum(),
        })
    }
}

/// Lowercased alphanumeric words, without a length limit.
pub fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Mean of the word vectors of `text` (headline plus any extracted text).
pub fn document_embedding(text: &str, embeddings: &EmbeddingTable) -> Vec<f64> {
    embeddings.mean_vector(&words(text))
}

/// Dense → ReLU → dense → softmax over the flattened (tier-1, tier-2) classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicClassifier {
    pub hidden: Dense,
    pub output: Dense,
    pub classes: Vec<Category>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicExample {
    pub embedding: Vec<f64>,
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicPrediction {
    pub probabilities: Vec<f64>,
    pub class: usize,
    pub category: Category,
}

impl TopicClassifier {
    pub fn new(classes: Vec<Category>, hidden: usize, seed: u64) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::config("topic classifier needs at least one class"));
        }
        let mut init = Init::new(seed);
        Ok(TopicClassifier {
            hidden: Dense::new(&mut init, TOPIC_EMBEDDING_DIM, hidden),
            output: Dense::new(&mut init, hidden, classes.len()),
            classes,
        })
    }

    /// Index of `category` in the flattened class list.
    pub fn class_of(&self, category: &Category) -> Option<usize> {
        self.classes.iter().position(|c| c == category)
    }

    fn logits(&self, x: &[f64], probe: Option<&mut KinkProbe>) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        if x.len() != TOPIC_EMBEDDING_DIM {
            return Err(Error::shape(format!(
                "topic classifier expects {TOPIC_EMBEDDING_DIM}-d embeddings, got {}",
                x.len()
            )));
        }
        let pre = self.hidden.forward(x)?;
        if let Some(p) = probe {
            pre.iter().for_each(|&v| p.relu(v));
        }
        let act: Vec<f64> = pre.iter().map(|&v| relu(v)).collect();
        let logits = self.output.forward(&act)?;
        Ok((pre, act, logits))
    }
}

pub fn classify_topic(embedding: &[f64], model: &TopicClassifier) -> Result<TopicPrediction> {
    let (_, _, logits) = model.logits(embedding, None)?;
    let probabilities = softmax(&logits)?;
    let class = probabilities
        .iter()
        .enumerate()
        .fold(0, |best, (i, &p)| if p > probabilities[best] { i } else { best });
    Ok(TopicPrediction {
        category: model.classes[class].clone(),
        class,
        probabilities,
    })
}

impl Parameterized for TopicClassifier {
    fn params(&self) -> Vec<(String, &Tensor)> {
        let mut v = prefixed("hidden", self.hidden.params());
        v.extend(prefixed("output", self.output.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.hidden.params_mut();
        v.extend(self.output.params_mut());
        v
    }
}

impl Differentiable for TopicClassifier {
    type Example = TopicExample;

    fn loss(&self, batch: &[TopicExample]) -> Result<f64> {
        Ok(self.loss_and_grad(batch)?.0)
    }

    fn loss_and_grad(&self, batch: &[TopicExample]) -> Result<(f64, Self)> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = batch.len() as f64;
        let mut grad = self.zeros_like();
        let mut total = 0.0;
        for ex in batch {
            let (pre, act, logits) = self.logits(&ex.embedding, None)?;
            let (l, mut d) = softmax_cross_entropy(&logits, ex.class)?;
            total += l;
            d.iter_mut().for_each(|v| *v /= n);
            let d_act = self.output.backward(&act, &d, &mut grad.output);
            let d_pre: Vec<f64> = d_act.iter().zip(&pre).map(|(g, &p)| if p > 0.0 { *g } else { 0.0 }).collect();
            self.hidden.backward(&ex.embedding, &d_pre, &mut grad.hidden);
        }
        Ok((total / n, grad))
    }

    fn kink_probe(&self, batch: &[TopicExample]) -> Result<Option<KinkProbe>> {
        let mut probe = KinkProbe::new();
        for ex in batch {
            self.logits(&ex.embedding, Some(&mut probe))?;
        }
        Ok(Some(probe))
    }
}

impl Classifier for TopicClassifier {
    fn predict(&self, ex: &TopicExample) -> Result<usize> {
        Ok(classify_topic(&ex.embedding, self)?.class)
    }

    fn target(ex: &TopicExample) -> usize {
        ex.class
    }
}
