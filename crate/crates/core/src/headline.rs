//! Headline popularity scoring: tokenizer, embedding lookup and a
//! bi-LSTM + additive-attention classifier whose attention weights are
//! reported as per-word contributions.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::datapipe::{split_dataset, EmbeddingTable, LabeledCorpus, SplitRatios};
use crate::nnkern::attention::{attention_backward, attention_forward};
use crate::nnkern::lstm::{bilstm_backward, bilstm_forward};
use crate::nnkern::ops::bce_with_logits;
use crate::nnkern::params::prefixed;
use crate::nnkern::train::accuracy;
use crate::nnkern::{
    train_classifier, Attention, BiLstm, Classifier, Dense, Differentiable, EpochMetrics, Init, Parameterized, Tensor,
    TrainConfig,
};
use crate::{math, Error, Result};

pub const MAX_TITLE_TOKENS: usize = 30;

/// Lowercases, splits on runs of non-alphanumeric characters and keeps the
/// first [`MAX_TITLE_TOKENS`] tokens.
pub fn tokenize(title: &str) -> Result<Vec<String>> {
    let tokens: Vec<String> = title
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .take(MAX_TITLE_TOKENS)
        .map(|t| t.to_lowercase())
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptyTitle);
    }
    Ok(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadlineConfig {
    pub embedding_dim: usize,
    pub hidden: usize,
    pub attention: usize,
}

impl HeadlineConfig {
    pub fn new(embedding_dim: usize) -> Self {
        HeadlineConfig {
            embedding_dim,
            hidden: 16,
            attention: 16,
        }
    }
}

/// Embedded title plus its class (1 = popular).
#[derive(Debug, Clone, PartialEq)]
pub struct HeadlineExample {
    pub inputs: Vec<Vec<f64>>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadlineModel {
    pub config: HeadlineConfig,
    pub encoder: BiLstm,
    pub attention: Attention,
    pub head: Dense,
}

struct Forward {
    hs: Vec<Vec<f64>>,
    enc: crate::nnkern::lstm::BiLstmCache,
    attn: crate::nnkern::attention::AttentionCache,
    context: Vec<f64>,
    logit: f64,
}

impl HeadlineModel {
    pub fn new(config: HeadlineConfig, seed: u64) -> Self {
        let mut init = Init::new(seed);
        let encoder = BiLstm::new(&mut init, config.embedding_dim, config.hidden);
        let attention = Attention::new(&mut init, 2 * config.hidden, config.attention);
        let head = Dense::new(&mut init, 2 * config.hidden, 1);
        HeadlineModel {
            config,
            encoder,
            attention,
            head,
        }
    }

    fn forward(&self, inputs: &[Vec<f64>]) -> Result<Forward> {
        if inputs.is_empty() {
            return Err(Error::EmptyTitle);
        }
        let (hs, enc) = bilstm_forward(inputs, &self.encoder)?;
        let (context, attn) = attention_forward(&hs, &self.attention)?;
        let logit = self.head.forward(&context)?[0];
        Ok(Forward {
            hs,
            enc,
            attn,
            context,
            logit,
        })
    }

    /// `(P(popular), attention weights)` for an embedded title.
    pub fn predict_proba(&self, inputs: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
        let f = self.forward(inputs)?;
        Ok((math::sigmoid(f.logit), f.attn.weights))
    }

    fn accumulate(&self, ex: &HeadlineExample, grad: &mut HeadlineModel) -> Result<f64> {
        let f = self.forward(&ex.inputs)?;
        let (loss, dlogit) = bce_with_logits(f.logit, ex.label as f64);
        let d_context = self.head.backward(&f.context, &[dlogit], &mut grad.head);
        let dhs = attention_backward(&self.attention, &f.hs, &f.attn, &d_context, &mut grad.attention);
        bilstm_backward(&self.encoder, &f.enc, &dhs, &mut grad.encoder);
        Ok(loss)
    }
}

impl Parameterized for HeadlineModel {
    fn params(&self) -> Vec<(String, &Tensor)> {
        let mut v = prefixed("encoder", self.encoder.params());
        v.extend(prefixed("attention", self.attention.params()));
        v.extend(prefixed("head", self.head.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.encoder.params_mut();
        v.extend(self.attention.params_mut());
        v.extend(self.head.params_mut());
        v
    }
}

impl Differentiable for HeadlineModel {
    type Example = HeadlineExample;

    fn loss(&self, batch: &[HeadlineExample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        for ex in batch {
            let f = self.forward(&ex.inputs)?;
            total += bce_with_logits(f.logit, ex.label as f64).0;
        }
        Ok(total / batch.len() as f64)
    }

    fn loss_and_grad(&self, batch: &[HeadlineExample]) -> Result<(f64, Self)> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut grad = self.zeros_like();
        let mut total = 0.0;
        for ex in batch {
            total += self.accumulate(ex, &mut grad)?;
        }
        let n = batch.len() as f64;
        for t in grad.params_mut() {
            t.scale(1.0 / n);
        }
        Ok((total / n, grad))
    }
}

impl Classifier for HeadlineModel {
    fn predict(&self, ex: &HeadlineExample) -> Result<usize> {
        Ok(usize::from(self.forward(&ex.inputs)?.logit > 0.0))
    }

    fn target(ex: &HeadlineExample) -> usize {
        ex.label
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadlineScore {
    pub probability_popular: f64,
    /// `(token, attention weight)` per token, weights summing to 1.
    pub contributions: Vec<(String, f64)>,
    pub oov_tokens: Vec<String>,
}

impl HeadlineScore {
    /// Tokens ordered by decreasing contribution (stable for ties).
    pub fn top_tokens(&self, k: usize) -> Vec<(String, f64)> {
        let mut c = self.contributions.clone();
        c.sort_by(|a, b| b.1.total_cmp(&a.1));
        c.truncate(k);
        c
    }
}

/// Embeds tokens, returning the vectors and the OOV tokens.
pub fn embed_tokens(tokens: &[String], embeddings: &EmbeddingTable) -> (Vec<Vec<f64>>, Vec<String>) {
    let mut oov = Vec::new();
    let inputs = tokens
        .iter()
        .map(|t| {
            let (v, missing) = embeddings.lookup(t);
            if missing {
                oov.push(t.clone());
            }
            v
        })
        .collect();
    (inputs, oov)
}

pub fn score_headline(title: &str, model: &HeadlineModel, embeddings: &EmbeddingTable) -> Result<HeadlineScore> {
    let tokens = tokenize(title)?;
    if embeddings.dim() != model.config.embedding_dim {
        return Err(Error::shape(alloc::format!(
            "embedding dimension {} does not match model input {}",
            embeddings.dim(),
            model.config.embedding_dim
        )));
    }
    let (inputs, oov_tokens) = embed_tokens(&tokens, embeddings);
    let (probability_popular, weights) = model.predict_proba(&inputs)?;
    Ok(HeadlineScore {
        probability_popular,
        contributions: tokens.into_iter().zip(weights).collect(),
        oov_tokens,
    })
}

#[derive(Debug, Clone)]
pub struct TrainedHeadline {
    pub model: HeadlineModel,
    pub history: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub test_accuracy: f64,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
}

/// Tokenizes and embeds every title of the corpus; titles without tokens are dropped.
pub fn corpus_examples(corpus: &LabeledCorpus, embeddings: &EmbeddingTable) -> Vec<HeadlineExample> {
    corpus
        .examples
        .iter()
        .filter_map(|ex| {
            let tokens = tokenize(&ex.record.title).ok()?;
            Some(HeadlineExample {
                inputs: embed_tokens(&tokens, embeddings).0,
                label: ex.label.as_class(),
            })
        })
        .collect()
}

/// 80/10/10 split, SGD with best-validation checkpointing, test evaluation.
pub fn train_headline_model(
    corpus: &LabeledCorpus,
    embeddings: &EmbeddingTable,
    config: HeadlineConfig,
    cfg: &TrainConfig,
) -> Result<TrainedHeadline> {
    if config.embedding_dim != embeddings.dim() {
        return Err(Error::shape(alloc::format!(
            "embedding dimension {} does not match model input {}",
            embeddings.dim(),
            config.embedding_dim
        )));
    }
    let examples = corpus_examples(corpus, embeddings);
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let split = split_dataset(&examples, SplitRatios::STANDARD, cfg.seed)?;
    let model = HeadlineModel::new(config, cfg.seed);
    let trained = train_classifier(model, &split.train, Some(&split.val), cfg)?;
    let test_accuracy = accuracy(&trained.model, &split.test)?;
    Ok(TrainedHeadline {
        model: trained.model,
        history: trained.history,
        best_epoch: trained.best_epoch,
        test_accuracy,
        train_size: split.train.len(),
        val_size: split.val.len(),
        test_size: split.test.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Cat Saves Owner!").unwrap(), ["cat", "saves", "owner"]);
        assert_eq!(tokenize("A-B 2").unwrap(), ["a", "b", "2"]);
        assert_eq!(tokenize("!!!"), Err(Error::EmptyTitle));
        let long: String = (0..40).map(|i| alloc::format!("w{i} ")).collect();
        assert_eq!(tokenize(&long).unwrap().len(), MAX_TITLE_TOKENS);
    }

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(4).unwrap();
        t.insert("cat", vec![0.1, -0.2, 0.3, 0.0]).unwrap();
        t.insert("video", vec![-0.1, 0.2, 0.0, 0.5]).unwrap();
        t
    }

    #[test]
    fn contributions_form_a_distribution() {
        let m = HeadlineModel::new(HeadlineConfig::new(4), 1);
        let s = score_headline("cat video, cat!", &m, &table()).unwrap();
        assert_eq!(s.contributions.len(), 3);
        let total: f64 = s.contributions.iter().map(|c| c.1).sum();
        assert!((total - 1.0).abs() < 1e-6);
        assert!((0.0..=1.0).contains(&s.probability_popular));
        assert!(s.oov_tokens.is_empty());
    }

    #[test]
    fn all_oov_title_is_scored() {
        let m = HeadlineModel::new(HeadlineConfig::new(4), 1);
        let s = score_headline("zebra quokka", &m, &table()).unwrap();
        assert_eq!(s.oov_tokens, ["zebra".to_string(), "quokka".to_string()]);
        assert!(s.probability_popular.is_finite());
    }

    #[test]
    fn dimension_mismatch_is_a_shape_error() {
        let m = HeadlineModel::new(HeadlineConfig::new(3), 1);
        assert!(matches!(score_headline("cat", &m, &table()), Err(Error::Shape(_))));
        assert_eq!(score_headline("...", &m, &table()), Err(Error::EmptyTitle));
    }
}
