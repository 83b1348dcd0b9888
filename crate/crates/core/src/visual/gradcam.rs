//! GradCAM: `α_k = mean(∂y/∂A^k)`, `L = ReLU(Σ_k α_k A^k)`, bilinear upsampling
//! to the frame size, then min-max normalization.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::nnkern::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyMap {
    pub height: usize,
    pub width: usize,
    /// Row-major heat in `[0, 1]`.
    pub grid: Vec<f64>,
    pub frame_index: usize,
    /// Range of the upsampled map before normalization.
    pub raw_min: f64,
    pub raw_max: f64,
}

impl SaliencyMap {
    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.grid[y * self.width + x]
    }

    pub fn is_all_zero(&self) -> bool {
        self.grid.iter().all(|&v| v == 0.0)
    }

    pub fn with_frame_index(mut self, frame_index: usize) -> Self {
        self.frame_index = frame_index;
        self
    }

    /// 8-bit quantization, `round(255 · v)`.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.grid
            .iter()
            .map(|&v| libm::round(v.clamp(0.0, 1.0) * 255.0) as u8)
            .collect()
    }
}

/// Class-activation heat map for one frame.
///
/// `activations` and `gradients` are `[K, h, w]`; the result is `height × width`.
pub fn gradcam(activations: &Tensor, gradients: &Tensor, height: usize, width: usize) -> Result<SaliencyMap> {
    if activations.shape() != gradients.shape() || activations.rank() != 3 {
        return Err(Error::shape(format!(
            "activations {:?} and gradients {:?} must be equal [K, h, w] shapes",
            activations.shape(),
            gradients.shape()
        )));
    }
    if height == 0 || width == 0 {
        return Err(Error::shape("saliency target must be nonempty"));
    }
    let (k, h, w) = (activations.shape()[0], activations.shape()[1], activations.shape()[2]);
    let mut cam = alloc::vec![0.0; h * w];
    for ch in 0..k {
        let alpha = gradients.row(ch).iter().sum::<f64>() / (h * w) as f64;
        if alpha == 0.0 {
            continue;
        }
        for (c, a) in cam.iter_mut().zip(activations.row(ch)) {
            *c += alpha * a;
        }
    }
    cam.iter_mut().for_each(|v| *v = v.max(0.0));

    let mut grid = bilinear(&cam, h, w, height, width);
    let raw_min = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let raw_max = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if raw_max > 0.0 {
        let span = raw_max - raw_min;
        if span > 0.0 {
            grid.iter_mut().for_each(|v| *v = (*v - raw_min) / span);
        } else {
            // Constant positive map.
            grid.iter_mut().for_each(|v| *v = 1.0);
        }
    } else {
        grid.iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(SaliencyMap {
        height,
        width,
        grid,
        frame_index: 0,
        raw_min,
        raw_max,
    })
}

/// Bilinear resampling with half-pixel centers and edge clamping.
pub fn bilinear(src: &[f64], h: usize, w: usize, out_h: usize, out_w: usize) -> Vec<f64> {
    let coord = |dst: usize, n_in: usize, n_out: usize| -> (usize, usize, f64) {
        let s = ((dst as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
        let i0 = libm::floor(s) as usize;
        let i1 = (i0 + 1).min(n_in - 1);
        (i0, i1, s - i0 as f64)
    };
    let mut out = Vec::with_capacity(out_h * out_w);
    for y in 0..out_h {
        let (y0, y1, fy) = coord(y, h, out_h);
        for x in 0..out_w {
            let (x0, x1, fx) = coord(x, w, out_w);
            let top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
            let bottom = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_gradients_give_zero_map() {
        let a = Tensor::from_vec(&[2, 2, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        let g = a.zeros_like();
        let m = gradcam(&a, &g, 4, 4).unwrap();
        assert!(m.is_all_zero());
        assert_eq!(m.grid.len(), 16);
    }

    #[test]
    fn single_channel_uniform_gradient() {
        // L = ReLU(0.5 A); with a zero entry present min-max equals ReLU(A) / max.
        let a = Tensor::from_vec(&[1, 2, 3], vec![-1.0, 2.0, 4.0, 0.0, 1.0, 3.0]).unwrap();
        let mut g = a.zeros_like();
        g.fill(0.5);
        let m = gradcam(&a, &g, 2, 3).unwrap();
        let expected = [0.0, 0.5, 1.0, 0.0, 0.25, 0.75];
        for (got, want) in m.grid.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{:?}", m.grid);
        }
        assert_eq!(m.raw_max, 2.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = Tensor::zeros(&[2, 2, 2]);
        let g = Tensor::zeros(&[2, 2, 3]);
        assert!(matches!(gradcam(&a, &g, 4, 4), Err(Error::Shape(_))));
    }

    #[test]
    fn bilinear_identity_and_constant() {
        let src = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(bilinear(&src, 2, 2, 2, 2), src);
        assert!(bilinear(&[5.0; 4], 2, 2, 7, 3).iter().all(|&v| (v - 5.0).abs() < 1e-12));
    }

    #[test]
    fn normalized_range_is_unit() {
        let a = Tensor::from_vec(&[1, 2, 2], vec![0.1, 0.5, 0.9, 0.3]).unwrap();
        let mut g = a.zeros_like();
        g.fill(1.0);
        let m = gradcam(&a, &g, 8, 8).unwrap();
        let lo = m.grid.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = m.grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((lo, hi), (0.0, 1.0));
    }
}
