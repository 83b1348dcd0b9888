//! Opening-scene model: a shared tanh projection of each frame's features,
//! additive attention across the frames and a sigmoid head.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::nnkern::attention::{attention_backward, attention_forward, AttentionCache};
use crate::nnkern::ops::bce_with_logits;
use crate::nnkern::params::prefixed;
use crate::nnkern::{Attention, Classifier, Dense, Differentiable, Init, Parameterized, Tensor};
use crate::{math, Error, Result};

pub const OPENING_FRAMES: usize = 18;
pub const OPENING_WINDOW_S: f64 = 6.0;

/// Indices of the 18 frames evenly spread over the first `min(6, duration)`
/// seconds: `floor(i · W / 18 · fps)`, clamped to the last frame.
pub fn opening_frame_indices(fps: f64, duration_s: f64) -> Result<Vec<usize>> {
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(Error::config(format!("fps must be positive, got {fps}")));
    }
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::config(format!("duration must be positive, got {duration_s}")));
    }
    let window = duration_s.min(OPENING_WINDOW_S);
    let last = (libm::ceil(duration_s * fps) as usize).saturating_sub(1);
    Ok((0..OPENING_FRAMES)
        .map(|i| {
            // Multiply before dividing so whole-frame timestamps stay exact.
            let idx = math::floor(i as f64 * window * fps / OPENING_FRAMES as f64 + 1e-9) as usize;
            idx.min(last)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpeningModel {
    pub projection: Dense,
    pub attention: Attention,
    pub head: Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpeningExample {
    pub frames: Vec<Vec<f64>>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpeningScore {
    pub probability_popular: f64,
    pub frame_attention: Vec<f64>,
}

struct Forward {
    zs: Vec<Vec<f64>>,
    attn: AttentionCache,
    context: Vec<f64>,
    logit: f64,
}

impl OpeningModel {
    pub fn new(feature_dim: usize, projection_dim: usize, attention_dim: usize, seed: u64) -> Self {
        let mut init = Init::new(seed);
        OpeningModel {
            projection: Dense::new(&mut init, feature_dim, projection_dim),
            attention: Attention::new(&mut init, projection_dim, attention_dim),
            head: Dense::new(&mut init, projection_dim, 1),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.projection.input_dim()
    }

    fn forward(&self, frames: &[Vec<f64>]) -> Result<Forward> {
        if frames.is_empty() {
            return Err(Error::EmptyInput);
        }
        let zs = frames
            .iter()
            .map(|f| Ok(self.projection.forward(f)?.into_iter().map(math::tanh).collect()))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let (context, attn) = attention_forward(&zs, &self.attention)?;
        let logit = self.head.forward(&context)?[0];
        Ok(Forward { zs, attn, context, logit })
    }

    /// `(P(popular), per-frame attention)`.
    pub fn predict(&self, frames: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
        let f = self.forward(frames)?;
        Ok((math::sigmoid(f.logit), f.attn.weights))
    }

    /// Backward from `d_logit`; returns the gradient on each frame's features.
    fn backward(&self, frames: &[Vec<f64>], f: &Forward, d_logit: f64, grad: &mut OpeningModel) -> Vec<Vec<f64>> {
        let d_context = self.head.backward(&f.context, &[d_logit], &mut grad.head);
        let d_zs = attention_backward(&self.attention, &f.zs, &f.attn, &d_context, &mut grad.attention);
        frames
            .iter()
            .zip(&f.zs)
            .zip(d_zs)
            .map(|((x, z), dz)| {
                let d_pre: Vec<f64> = dz.iter().zip(z).map(|(d, z)| d * (1.0 - z * z)).collect();
                self.projection.backward(x, &d_pre, &mut grad.projection)
            })
            .collect()
    }

    /// `(logit, d logit / d features_t)` for every frame.
    pub fn input_gradients(&self, frames: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
        let f = self.forward(frames)?;
        let mut scratch = self.zeros_like();
        let d = self.backward(frames, &f, 1.0, &mut scratch);
        Ok((f.logit, d))
    }
}

/// Scores exactly [`OPENING_FRAMES`] feature vectors.
pub fn score_opening(features: &[Vec<f64>], model: &OpeningModel) -> Result<OpeningScore> {
    if features.len() != OPENING_FRAMES {
        return Err(Error::shape(format!(
            "opening-scene model needs {OPENING_FRAMES} frames, got {}",
            features.len()
        )));
    }
    let (probability_popular, frame_attention) = model.predict(features)?;
    Ok(OpeningScore {
        probability_popular,
        frame_attention,
    })
}

impl Parameterized for OpeningModel {
    fn params(&self) -> Vec<(String, &Tensor)> {
        let mut v = prefixed("projection", self.projection.params());
        v.extend(prefixed("attention", self.attention.params()));
        v.extend(prefixed("head", self.head.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.projection.params_mut();
        v.extend(self.attention.params_mut());
        v.extend(self.head.params_mut());
        v
    }
}

impl Differentiable for OpeningModel {
    type Example = OpeningExample;

    fn loss(&self, batch: &[OpeningExample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        for ex in batch {
            total += bce_with_logits(self.forward(&ex.frames)?.logit, ex.label as f64).0;
        }
        Ok(total / batch.len() as f64)
    }

    fn loss_and_grad(&self, batch: &[OpeningExample]) -> Result<(f64, Self)> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = batch.len() as f64;
        let mut grad = self.zeros_like();
        let mut total = 0.0;
        for ex in batch {
            let f = self.forward(&ex.frames)?;
            let (l, d) = bce_with_logits(f.logit, ex.label as f64);
            total += l;
            self.backward(&ex.frames, &f, d / n, &mut grad);
        }
        Ok((total / n, grad))
    }
}

impl Classifier for OpeningModel {
    fn predict(&self, ex: &OpeningExample) -> Result<usize> {
        Ok(usize::from(self.forward(&ex.frames)?.logit > 0.0))
    }

    fn target(ex: &OpeningExample) -> usize {
        ex.label
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn thirty_fps_full_window() {
        let idx = opening_frame_indices(30.0, 10.0).unwrap();
        assert_eq!(idx, (0..18).map(|i| 10 * i).collect::<Vec<_>>());
    }

    #[test]
    fn short_video_compresses_window() {
        let idx = opening_frame_indices(30.0, 3.0).unwrap();
        assert_eq!(idx, (0..18).map(|i| 5 * i).collect::<Vec<_>>());
    }

    #[test]
    fn one_fps_repeats_frames() {
        let idx = opening_frame_indices(1.0, 8.0).unwrap();
        assert_eq!(idx, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4, 5, 5, 5]);
        assert!(opening_frame_indices(0.0, 8.0).is_err());
        assert!(opening_frame_indices(-1.0, 8.0).is_err());
    }

    #[test]
    fn clamped_to_last_frame() {
        // 0.5 s at 4 fps has frames 0 and 1 only.
        let idx = opening_frame_indices(4.0, 0.5).unwrap();
        assert!(idx.iter().all(|&i| i <= 1));
        assert!(idx.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn identical_frames_get_uniform_attention() {
        let m = OpeningModel::new(5, 4, 3, 1);
        let frames = vec![vec![0.3, -0.2, 0.1, 0.0, 0.9]; 18];
        let s = score_opening(&frames, &m).unwrap();
        assert_eq!(s.frame_attention.len(), 18);
        for w in &s.frame_attention {
            assert!((w - 1.0 / 18.0).abs() < 1e-12);
        }
        assert!(matches!(score_opening(&frames[..17], &m), Err(Error::Shape(_))));
    }
}
