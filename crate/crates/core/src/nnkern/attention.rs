//! Additive attention pooling: `e_t = v · tanh(W_a h_t)`, `α = softmax(e)`,
//! `c = Σ α_t h_t`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ops::softmax;
use super::params::{Init, Parameterized};
use super::tensor::{dot, matvec_acc, matvec_t_acc, outer_acc, Tensor};
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attention {
    /// `[A, D]` projection of each hidden vector.
    pub w_a: Tensor,
    /// `[A]` scoring vector.
    pub v: Tensor,
}

impl Attention {
    pub fn new(init: &mut Init, input: usize, attn: usize) -> Self {
        Attention {
            w_a: init.glorot(&[attn, input], input, attn),
            v: init.glorot(&[attn], attn, 1),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_a.cols()
    }
}

impl Parameterized for Attention {
    fn params(&self) -> Vec<(String, &Tensor)> {
        vec![("w_a".into(), &self.w_a), ("v".into(), &self.v)]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w_a, &mut self.v]
    }
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    /// `tanh(W_a h_t)` per position.
    u: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Pools `hs` into a context vector. Returns `(context, weights)`.
pub fn attention_pool(hs: &[Vec<f64>], p: &Attention) -> Result<(Vec<f64>, Vec<f64>)> {
    let (c, cache) = attention_forward(hs, p)?;
    Ok((c, cache.weights))
}

pub fn attention_forward(hs: &[Vec<f64>], p: &Attention) -> Result<(Vec<f64>, AttentionCache)> {
    if hs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let d = p.input_dim();
    if let Some(bad) = hs.iter().position(|h| h.len() != d) {
        return Err(Error::shape(format!(
            "attention expects {d}-d inputs, position {bad} has {}",
            hs[bad].len()
        )));
    }
    let a = p.w_a.rows();
    let u: Vec<Vec<f64>> = hs
        .iter()
        .map(|h| {
            let mut z = vec![0.0; a];
            matvec_acc(&p.w_a, h, &mut z);
            z.into_iter().map(math::tanh).collect()
        })
        .collect();
    let scores: Vec<f64> = u.iter().map(|ut| dot(p.v.data(), ut)).collect();
    let weights = softmax(&scores)?;
    let mut context = vec![0.0; d];
    for (h, &w) in hs.iter().zip(&weights) {
        for (c, x) in context.iter_mut().zip(h) {
            *c += w * x;
        }
    }
    Ok((context, AttentionCache { u, weights }))
}

/// Accumulates parameter gradients and returns `dL/dh_t` per position.
pub fn attention_backward(p: &Attention, hs: &[Vec<f64>], cache: &AttentionCache, d_context: &[f64], grad: &mut Attention) -> Vec<Vec<f64>> {
    let alpha = &cache.weights;
    let d_alpha: Vec<f64> = hs.iter().map(|h| dot(d_context, h)).collect();
    let mean: f64 = alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
    let mut dhs = Vec::with_capacity(hs.len());
    for (t, h) in hs.iter().enumerate() {
        let de = alpha[t] * (d_alpha[t] - mean);
        let mut dh: Vec<f64> = d_context.iter().map(|d| alpha[t] * d).collect();
        let u = &cache.u[t];
        for (g, uk) in grad.v.data_mut().iter_mut().zip(u) {
            *g += de * uk;
        }
        let dz: Vec<f64> = u
            .iter()
            .zip(p.v.data())
            .map(|(uk, vk)| de * vk * (1.0 - uk * uk))
            .collect();
        outer_acc(&mut grad.w_a, &dz, h);
        matvec_t_acc(&p.w_a, &dz, &mut dh);
        dhs.push(dh);
    }
    dhs
}
