//! Deterministic mini-batch SGD.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::Classifier;
use crate::{Error, Result};

/// Decorrelates the shuffle stream from initializers seeded with the same value.
const SHUFFLE_STREAM: u64 = 0x5eed_0f00_d3e5_0001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 50,
            batch_size: 16,
            seed: 0,
            l2: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::config("epochs and batch size must be positive"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::config(format!("l2 penalty must be nonnegative, got {}", self.l2)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean training loss over the epoch's mini-batches (without L2).
    pub loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub model: M,
    pub history: Vec<EpochMetrics>,
    /// Epoch (1-based) whose parameters were returned.
    pub best_epoch: usize,
}

pub fn accuracy<M: Classifier>(model: &M, data: &[M::Example]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for ex in data {
        if model.predict(ex)? == M::target(ex) {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

/// Trains `model` in place order-deterministically from `cfg.seed`.
///
/// With a validation set, the returned parameters are those of the epoch with
/// the best validation accuracy (earliest on ties); otherwise the final ones.
pub fn train_classifier<M>(model: M, train: &[M::Example], val: Option<&[M::Example]>, cfg: &TrainConfig) -> Result<Trained<M>>
where
    M: Classifier,
    M::Example: Clone,
{
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut model = model;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, M)> = None;
    let mut batch: Vec<M::Example> = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i].clone()));
            let (loss, grad) = model.loss_and_grad(&batch)?;
            if !loss.is_finite() || !grad.all_finite() {
                return Err(Error::Numerical {
                    epoch: Some(epoch),
                    message: format!("loss became {loss}"),
                });
            }
            sgd_step(&mut model, &grad, cfg.learning_rate, cfg.l2);
            loss_sum += loss;
            batches += 1;
        }
        let train_accuracy = accuracy(&model, train)?;
        let val_accuracy = match val {
            Some(v) if !v.is_empty() => Some(accuracy(&model, v)?),
            _ => None,
        };
        history.push(EpochMetrics {
            epoch,
            loss: loss_sum / batches as f64,
            train_accuracy,
            val_accuracy,
        });
        if let Some(acc) = val_accuracy {
            if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                best = Some((acc, epoch, model.clone()));
            }
        }
    }
    Ok(match best {
        Some((_, best_epoch, m)) => Trained {
            model: m,
            history,
            best_epoch,
        },
        None => Trained {
            model,
            best_epoch: cfg.epochs,
            history,
        },
    })
}

/// `p ← p − lr (g + l2 p)`.
pub fn sgd_step<M: super::Parameterized>(model: &mut M, grad: &M, lr: f64, l2: f64) {
    let grads = grad.params();
    for (p, (_, g)) in model.params_mut().into_iter().zip(grads) {
        for (pv, gv) in p.data_mut().iter_mut().zip(g.data()) {
            *pv -= lr * (gv + l2 * *pv);
        }
    }
}
