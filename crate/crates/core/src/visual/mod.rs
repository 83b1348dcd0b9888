//! Thumbnail recommendation, the opening-scene popularity model, the tiny
//! CNN backbone and GradCAM saliency.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::nnkern::ops::bce_with_logits;
use crate::nnkern::{Classifier, Dense, Differentiable, Init, Parameterized, Tensor};
use crate::{math, Error, Result};

pub mod gradcam;
pub mod opening;
pub mod tinycnn;

pub use gradcam::{gradcam, SaliencyMap};
pub use opening::{opening_frame_indices, score_opening, OpeningModel, OpeningScore, OPENING_FRAMES, OPENING_WINDOW_S};
pub use tinycnn::{tinycnn_extract, FrameClassifier, ImageExample, TargetClass, TinyCnn};

/// Frames evaluated per video for thumbnail selection.
pub const THUMBNAIL_FRAMES: usize = 40;

/// Frames in a video, as images (`[H, W, C]` in `[-1, 1]`) or backbone features.
#[derive(Debug, Clone, PartialEq)]
pub enum Frames {
    Images(Vec<Tensor>),
    Features(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    frames: Frames,
    fps: f64,
    timestamps: Vec<f64>,
}

impl FrameSet {
    pub fn new(frames: Frames, fps: f64, timestamps: Vec<f64>) -> Result<Self> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::config(format!("fps must be positive, got {fps}")));
        }
        let n = match &frames {
            Frames::Images(v) => v.len(),
            Frames::Features(v) => v.len(),
        };
        if n != timestamps.len() {
            return Err(Error::shape(format!("{n} frames but {} timestamps", timestamps.len())));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail too
        if timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("frame timestamps must be strictly increasing"));
        }
        Ok(FrameSet { frames, fps, timestamps })
    }

    pub fn frames(&self) -> &Frames {
        &self.frames
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }
}

/// Up to `k` uniformly spaced frame indices: `floor(i (N−1) / (k−1))`.
/// Videos with at most `k` frames return every index.
pub fn sample_frame_indices(total_frames: usize, k: usize) -> Result<Vec<usize>> {
    if total_frames == 0 {
        return Err(Error::EmptyVideo);
    }
    if k == 0 {
        return Err(Error::config("must sample at least one frame"));
    }
    if total_frames <= k {
        return Ok((0..total_frames).collect());
    }
    if k == 1 {
        return Ok(alloc::vec![0]);
    }
    Ok((0..k).map(|i| i * (total_frames - 1) / (k - 1)).collect())
}

/// `sigmoid(w · f + b)` for every feature vector.
pub fn score_frames(features: &[Vec<f64>], head: &Dense) -> Result<Vec<f64>> {
    if head.output_dim() != 1 {
        return Err(Error::shape(format!("scoring head must have one output, has {}", head.output_dim())));
    }
    features
        .iter()
        .map(|f| Ok(math::sigmoid(head.forward(f)?[0])))
        .collect()
}

/// Index of the highest score; the lowest index wins ties.
pub fn recommend_thumbnail(scores: &[f64]) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThumbnailRecommendation {
    pub scores: Vec<f64>,
    pub recommended: usize,
}

pub fn recommend_from_features(features: &[Vec<f64>], head: &ThumbnailHead) -> Result<ThumbnailRecommendation> {
    let scores = score_frames(features, &head.0)?;
    let recommended = recommend_thumbnail(&scores)?;
    Ok(ThumbnailRecommendation { scores, recommended })
}

/// Opening-scene score from raw frames: features come from `backbone`, and
/// with `saliency` set each frame also gets a GradCAM map for that class,
/// driven by the gradient of the opening model's logit.
pub fn score_opening_frames(
    frames: &[Tensor],
    backbone: &TinyCnn,
    model: &OpeningModel,
    saliency: Option<TargetClass>,
) -> Result<(OpeningScore, Vec<SaliencyMap>)> {
    if frames.len() != OPENING_FRAMES {
        return Err(Error::shape(format!("expected {OPENING_FRAMES} frames, got {}", frames.len())));
    }
    let caches = frames.iter().map(|f| backbone.forward(f)).collect::<Result<Vec<_>>>()?;
    let features: Vec<Vec<f64>> = caches.iter().map(|c| c.features.clone()).collect();
    let score = score_opening(&features, model)?;
    let Some(class) = saliency else {
        return Ok((score, Vec::new()));
    };
    let (_, d_features) = model.input_gradients(&features)?;
    let maps = caches
        .iter()
        .zip(&d_features)
        .zip(frames)
        .enumerate()
        .map(|(i, ((cache, d), frame))| {
            let d: Vec<f64> = d.iter().map(|g| class.sign() * g).collect();
            let grads = TinyCnn::activation_gradient(cache, &d);
            let s = frame.shape();
            Ok(gradcam(&cache.activations, &grads, s[0], s[1])?.with_frame_index(i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((score, maps))
}

/// Binary dense + sigmoid layer trained on frozen backbone features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThumbnailHead(pub Dense);

/// Backbone features of one frame with its class (1 = popular).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl ThumbnailHead {
    pub fn new(dim: usize, seed: u64) -> Self {
        ThumbnailHead(Dense::new(&mut Init::new(seed), dim, 1))
    }

    pub fn input_dim(&self) -> usize {
        self.0.input_dim()
    }
}

impl Parameterized for ThumbnailHead {
    fn params(&self) -> Vec<(String, &Tensor)> {
        crate::nnkern::params::prefixed("head", self.0.params())
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.0.params_mut()
    }
}

impl Differentiable for ThumbnailHead {
    type Example = FeatureExample;

    fn loss(&self, batch: &[FeatureExample]) -> Result<f64> {
        Ok(self.loss_and_grad(batch)?.0)
    }

    fn loss_and_grad(&self, batch: &[FeatureExample]) -> Result<(f64, Self)> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = batch.len() as f64;
        let mut grad = self.zeros_like();
        let mut total = 0.0;
        for ex in batch {
            let z = self.0.forward(&ex.features)?[0];
            let (l, d) = bce_with_logits(z, ex.label as f64);
            total += l;
            self.0.backward(&ex.features, &[d / n], &mut grad.0);
        }
        Ok((total / n, grad))
    }
}

impl Classifier for ThumbnailHead {
    fn predict(&self, ex: &FeatureExample) -> Result<usize> {
        Ok(usize::from(self.0.forward(&ex.features)?[0] > 0.0))
    }

    fn target(ex: &FeatureExample) -> usize {
        ex.label
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn sampling_examples() {
        assert_eq!(sample_frame_indices(40, 40).unwrap(), (0..40).collect::<Vec<_>>());
        assert_eq!(sample_frame_indices(79, 40).unwrap(), (0..40).map(|i| 2 * i).collect::<Vec<_>>());
        assert_eq!(sample_frame_indices(3, 40).unwrap(), vec![0, 1, 2]);
        assert_eq!(sample_frame_indices(0, 40), Err(Error::EmptyVideo));
        assert_eq!(sample_frame_indices(10, 1).unwrap(), vec![0]);
    }

    #[test]
    fn zero_head_scores_one_half() {
        let mut head = ThumbnailHead::new(3, 0);
        head.0.w.fill(0.0);
        let s = score_frames(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.0, 9.0]], &head.0).unwrap();
        assert_eq!(s, vec![0.5, 0.5]);
        assert!(score_frames(&[], &head.0).unwrap().is_empty());
        assert!(matches!(score_frames(&[vec![1.0]], &head.0), Err(Error::Shape(_))));
    }

    #[test]
    fn recommendation_examples() {
        assert_eq!(recommend_thumbnail(&[0.1, 0.9, 0.5]).unwrap(), 1);
        assert_eq!(recommend_thumbnail(&[0.7, 0.7]).unwrap(), 0);
        assert_eq!(recommend_thumbnail(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn frame_set_validation() {
        let f = Frames::Features(vec![vec![0.0]; 2]);
        assert!(FrameSet::new(f.clone(), 30.0, vec![0.0, 0.1]).is_ok());
        assert!(FrameSet::new(f.clone(), 30.0, vec![0.1, 0.1]).is_err());
        assert!(FrameSet::new(f, 0.0, vec![0.0, 0.1]).is_err());
    }
}
