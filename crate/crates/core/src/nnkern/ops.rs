//! Activations and losses.

use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Numerically stable softmax (shift by max before exponentiating).
pub fn softmax(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = x.iter().map(|&v| math::exp(v - max)).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    Ok(out)
}

pub fn sigmoid(x: f64) -> f64 {
    math::sigmoid(x)
}

pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Binary cross-entropy on a logit. Returns `(loss, d loss / d logit)`.
pub fn bce_with_logits(logit: f64, target: f64) -> (f64, f64) {
    let loss = math::softplus(logit) - target * logit;
    (loss, math::sigmoid(logit) - target)
}

/// Softmax cross-entropy. Returns `(loss, d loss / d logits)`.
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    let mut p = softmax(logits)?;
    if target >= p.len() {
        return Err(Error::config(alloc::format!(
            "class index {target} out of range for {} classes",
            p.len()
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + math::ln(logits.iter().map(|&v| math::exp(v - max)).sum::<f64>());
    let loss = lse - logits[target];
    p[target] -= 1.0;
    Ok((loss, p))
}
