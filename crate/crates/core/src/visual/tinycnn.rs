//! Small differentiable backbone:
//! conv3×3(8) → ReLU → maxpool2 → conv3×3(16) → ReLU → maxpool2 → global
//! average pool → 16-d features. The last pooled maps are kept for GradCAM.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::nnkern::conv::{maxpool2, maxpool2_backward, relu_backward, relu_map};
use crate::nnkern::ops::bce_with_logits;
use crate::nnkern::params::prefixed;
use crate::nnkern::{Classifier, Conv2d, Dense, Differentiable, Init, KinkProbe, Parameterized, Tensor};
use crate::{math, Error, Result};

pub const FEATURE_DIM: usize = 16;
const HIDDEN_CHANNELS: usize = 8;
pub const MIN_SIDE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyCnn {
    pub conv1: Conv2d,
    pub conv2: Conv2d,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct BackboneCache {
    input: Tensor,
    pre1: Tensor,
    act1: Tensor,
    arg1: Vec<usize>,
    pooled1: Tensor,
    pre2: Tensor,
    act2: Tensor,
    arg2: Vec<usize>,
    /// Last retained activation maps `[16, H/4, W/4]`.
    pub activations: Tensor,
    pub features: Vec<f64>,
    pub probe: KinkProbe,
}

/// `[H, W, C]` → `[C, H, W]`.
fn to_chw(image: &Tensor) -> Tensor {
    let s = image.shape();
    let (h, w, c) = (s[0], s[1], s[2]);
    let mut out = Tensor::zeros(&[c, h, w]);
    let src = image.data();
    let dst = out.data_mut();
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                dst[(ch * h + y) * w + x] = src[(y * w + x) * c + ch];
            }
        }
    }
    out
}

impl TinyCnn {
    pub fn new(channels: usize, seed: u64) -> Self {
        let mut init = Init::new(seed);
        TinyCnn {
            conv1: Conv2d::new(&mut init, channels, HIDDEN_CHANNELS),
            conv2: Conv2d::new(&mut init, HIDDEN_CHANNELS, FEATURE_DIM),
        }
    }

    pub fn channels(&self) -> usize {
        self.conv1.in_channels()
    }

    pub fn forward(&self, image: &Tensor) -> Result<BackboneCache> {
        let s = image.shape();
        if s.len() != 3 || s[0] < MIN_SIDE || s[1] < MIN_SIDE || s[2] != self.channels() {
            return Err(Error::shape(format!(
                "backbone needs an H×W×{} image with H, W ≥ {MIN_SIDE}, got {s:?}",
                self.channels()
            )));
        }
        let mut probe = KinkProbe::new();
        let input = to_chw(image);
        let pre1 = self.conv1.forward(&input)?;
        let act1 = relu_map(&pre1, &mut probe);
        let (pooled1, arg1) = maxpool2(&act1, &mut probe);
        let pre2 = self.conv2.forward(&pooled1)?;
        let act2 = relu_map(&pre2, &mut probe);
        let (activations, arg2) = maxpool2(&act2, &mut probe);
        let area = (activations.shape()[1] * activations.shape()[2]) as f64;
        let features = (0..FEATURE_DIM)
            .map(|k| activations.row(k).iter().sum::<f64>() / area)
            .collect();
        Ok(BackboneCache {
            input,
            pre1,
            act1,
            arg1,
            pooled1,
            pre2,
            act2,
            arg2,
            activations,
            features,
            probe,
        })
    }

    /// Gradient on the retained activation maps given `dL/d features`.
    pub fn activation_gradient(cache: &BackboneCache, d_features: &[f64]) -> Tensor {
        let mut d = cache.activations.zeros_like();
        let area = (d.shape()[1] * d.shape()[2]) as f64;
        for (k, &g) in d_features.iter().enumerate() {
            d.row_mut(k).iter_mut().for_each(|v| *v = g / area);
        }
        d
    }

    /// Accumulates parameter gradients from `dL/d features`.
    pub fn backward(&self, cache: &BackboneCache, d_features: &[f64], grad: &mut TinyCnn) {
        let d_pooled2 = Self::activation_gradient(cache, d_features);
        let d_act2 = maxpool2_backward(cache.act2.shape(), &cache.arg2, &d_pooled2);
        let d_pre2 = relu_backward(&cache.pre2, &d_act2);
        let d_pooled1 = self.conv2.backward(&cache.pooled1, &d_pre2, &mut grad.conv2);
        let d_act1 = maxpool2_backward(cache.act1.shape(), &cache.arg1, &d_pooled1);
        let d_pre1 = relu_backward(&cache.pre1, &d_act1);
        self.conv1.backward(&cache.input, &d_pre1, &mut grad.conv1);
    }
}

impl Parameterized for TinyCnn {
    fn params(&self) -> Vec<(String, &Tensor)> {
        let mut v = prefixed("conv1", self.conv1.params());
        v.extend(prefixed("conv2", self.conv2.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.conv1.params_mut();
        v.extend(self.conv2.params_mut());
        v
    }
}

/// Returns the 16-d features and the retained `[16, H/4, W/4]` activation maps.
pub fn tinycnn_extract(image: &Tensor, backbone: &TinyCnn) -> Result<(Vec<f64>, Tensor)> {
    let c = backbone.forward(image)?;
    Ok((c.features, c.activations))
}

/// Class whose score GradCAM explains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetClass {
    Popular,
    Unpopular,
}

impl TargetClass {
    /// Sign turning the popular-class logit into this class's score.
    pub fn sign(self) -> f64 {
        match self {
            TargetClass::Popular => 1.0,
            TargetClass::Unpopular => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageExample {
    pub image: Tensor,
    pub label: usize,
}

/// Backbone plus a binary dense head on its features, trained end to end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameClassifier {
    pub backbone: TinyCnn,
    pub head: Dense,
}

impl FrameClassifier {
    pub fn new(channels: usize, seed: u64) -> Self {
        let backbone = TinyCnn::new(channels, seed);
        let mut init = Init::new(seed.wrapping_add(1));
        FrameClassifier {
            backbone,
            head: Dense::new(&mut init, FEATURE_DIM, 1),
        }
    }

    pub fn logit(&self, image: &Tensor) -> Result<f64> {
        let c = self.backbone.forward(image)?;
        Ok(self.head.forward(&c.features)?[0])
    }

    pub fn probability(&self, image: &Tensor) -> Result<f64> {
        Ok(math::sigmoid(self.logit(image)?))
    }

    /// Activation maps and `∂y/∂A` for the class score `y` (the logit for
    /// popular, its negation for unpopular).
    pub fn class_gradients(&self, image: &Tensor, class: TargetClass) -> Result<(Tensor, Tensor)> {
        let c = self.backbone.forward(image)?;
        let d_features: Vec<f64> = self.head.w.row(0).iter().map(|w| class.sign() * w).collect();
        let grads = TinyCnn::activation_gradient(&c, &d_features);
        Ok((c.activations, grads))
    }
}

impl Parameterized for FrameClassifier {
    fn params(&self) -> Vec<(String, &Tensor)> {
        let mut v = prefixed("backbone", self.backbone.params());
        v.extend(prefixed("head", self.head.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.backbone.params_mut();
        v.extend(self.head.params_mut());
        v
    }
}

impl Differentiable for FrameClassifier {
    type Example = ImageExample;

    fn loss(&self, batch: &[ImageExample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        for ex in batch {
            total += bce_with_logits(self.logit(&ex.image)?, ex.label as f64).0;
        }
        Ok(total / batch.len() as f64)
    }

    fn loss_and_grad(&self, batch: &[ImageExample]) -> Result<(f64, Self)> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = batch.len() as f64;
        let mut grad = self.zeros_like();
        let mut total = 0.0;
        for ex in batch {
            let c = self.backbone.forward(&ex.image)?;
            let z = self.head.forward(&c.features)?[0];
            let (l, d) = bce_with_logits(z, ex.label as f64);
            total += l;
            let d_features = self.head.backward(&c.features, &[d / n], &mut grad.head);
            self.backbone.backward(&c, &d_features, &mut grad.backbone);
        }
        Ok((total / n, grad))
    }

    fn kink_probe(&self, batch: &[ImageExample]) -> Result<Option<KinkProbe>> {
        let mut probe = KinkProbe::new();
        for ex in batch {
            probe.merge(&self.backbone.forward(&ex.image)?.probe);
        }
        Ok(Some(probe))
    }
}

impl Classifier for FrameClassifier {
    fn predict(&self, ex: &ImageExample) -> Result<usize> {
        Ok(usize::from(self.logit(&ex.image)? > 0.0))
    }

    fn target(ex: &ImageExample) -> usize {
        ex.label
    }
}
