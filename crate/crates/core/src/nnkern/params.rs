use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Tensor;
use crate::math;
use crate::Result;

/// A container of named parameter tensors.
///
/// `params` and `params_mut` must list tensors in the same order. A model's
/// gradient is represented by a value of the same type, so that parameters
/// and gradients can be zipped.
pub trait Parameterized {
    fn params(&self) -> Vec<(String, &Tensor)>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|(_, t)| t.len()).sum()
    }

    /// A copy with every parameter set to zero.
    fn zeros_like(&self) -> Self
    where
        Self: Clone,
    {
        let mut z = self.clone();
        for t in z.params_mut() {
            t.fill(0.0);
        }
        z
    }

    /// `self += alpha * other`, parameter by parameter.
    fn axpy(&mut self, alpha: f64, other: &Self) {
        let src = other.params();
        for (dst, (_, s)) in self.params_mut().into_iter().zip(src) {
            dst.axpy(alpha, s);
        }
    }

    fn all_finite(&self) -> bool {
        self.params().iter().all(|(_, t)| t.is_finite())
    }
}

/// Prefixes every name of a nested parameter list.
pub(crate) fn prefixed<'a>(prefix: &str, inner: Vec<(String, &'a Tensor)>) -> Vec<(String, &'a Tensor)> {
    inner
        .into_iter()
        .map(|(n, t)| (alloc::format!("{prefix}.{n}"), t))
        .collect()
}

/// Proximity of the current evaluation point to a non-differentiable kink
/// (ReLU at zero, max-pool ties).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkProbe {
    /// Smallest |pre-activation| (or top-two gap in a pooling window).
    pub margin: f64,
    /// Hash of the on/off pattern of every kinked unit.
    pub pattern: u64,
}

impl KinkProbe {
    pub fn new() -> Self {
        KinkProbe {
            margin: f64::INFINITY,
            pattern: 0xcbf2_9ce4_8422_2325,
        }
    }

    /// Records one ReLU pre-activation.
    #[inline]
    pub fn relu(&mut self, pre: f64) {
        self.margin = self.margin.min(math::abs(pre));
        self.mix(u64::from(pre > 0.0));
    }

    /// Records one max-pool decision.
    #[inline]
    pub fn pool(&mut self, winner: usize, gap: f64) {
        self.margin = self.margin.min(gap);
        self.mix(winner as u64);
    }

    #[inline]
    fn mix(&mut self, v: u64) {
        self.pattern ^= v.wrapping_add(0x9e37_79b9);
        self.pattern = self.pattern.wrapping_mul(0x0100_0000_01b3);
    }

    pub fn merge(&mut self, other: &KinkProbe) {
        self.margin = self.margin.min(other.margin);
        self.mix(other.pattern);
    }
}

impl Default for KinkProbe {
    fn default() -> Self {
        Self::new()
    }
}

/// A parameterized model with a scalar training loss and its analytic gradient.
pub trait Differentiable: Parameterized + Clone {
    type Example;

    /// Mean loss over the batch.
    fn loss(&self, batch: &[Self::Example]) -> Result<f64>;

    /// Mean loss and its gradient with respect to every parameter.
    fn loss_and_grad(&self, batch: &[Self::Example]) -> Result<(f64, Self)>;

    /// Kink proximity for models with ReLU or max-pool units.
    fn kink_probe(&self, _batch: &[Self::Example]) -> Result<Option<KinkProbe>> {
        Ok(None)
    }
}

/// A differentiable model that predicts class indices.
pub trait Classifier: Differentiable {
    fn predict(&self, example: &Self::Example) -> Result<usize>;
    fn target(example: &Self::Example) -> usize;
}

/// Seeded parameter initializer.
///
/// Weights are drawn from `uniform(-r, r)` with `r = sqrt(6 / (fan_in + fan_out))`;
/// biases start at zero.
pub struct Init {
    rng: ChaCha8Rng,
}

impl Init {
    pub fn new(seed: u64) -> Self {
        Init {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn glorot(&mut self, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
        let r = math::sqrt(6.0 / (fan_in + fan_out) as f64);
        let mut t = Tensor::zeros(shape);
        for v in t.data_mut() {
            *v = self.rng.random_range(-r..r);
        }
        t
    }

    pub fn zeros(&mut self, shape: &[usize]) -> Tensor {
        Tensor::zeros(shape)
    }
}

/// Overwrites every parameter of `model` from a named list, such as one read
/// from a checkpoint. Names and shapes must match exactly.
pub fn assign_params<M: Parameterized>(model: &mut M, named: &[(String, Tensor)]) -> Result<()> {
    let expected: Vec<(String, Vec<usize>)> = model
        .params()
        .into_iter()
        .map(|(n, t)| (n, t.shape().to_vec()))
        .collect();
    if expected.len() != named.len() {
        return Err(crate::Error::shape(alloc::format!(
            "model has {} tensors, checkpoint has {}",
            expected.len(),
            named.len()
        )));
    }
    for ((name, shape), (n, t)) in expected.iter().zip(named) {
        if name != n || shape.as_slice() != t.shape() {
            return Err(crate::Error::shape(alloc::format!(
                "expected tensor {name} {shape:?}, found {n} {:?}",
                t.shape()
            )));
        }
    }
    for (dst, (_, src)) in model.params_mut().into_iter().zip(named) {
        dst.data_mut().copy_from_slice(src.data());
    }
    Ok(())
}
