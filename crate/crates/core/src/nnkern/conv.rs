//! 3×3 same-padded convolution, ReLU and 2×2 max pooling over `[C, H, W]` maps.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::params::{Init, KinkProbe, Parameterized};
use super::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv2d {
    /// `[out_c, in_c, 3, 3]`
    pub w: Tensor,
    /// `[out_c]`
    pub b: Tensor,
}

fn dims(t: &Tensor) -> (usize, usize, usize) {
    let s = t.shape();
    (s[0], s[1], s[2])
}

impl Conv2d {
    pub fn new(init: &mut Init, in_c: usize, out_c: usize) -> Self {
        Conv2d {
            w: init.glorot(&[out_c, in_c, 3, 3], in_c * 9, out_c * 9),
            b: init.zeros(&[out_c]),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.w.shape()[0]
    }

    #[inline]
    fn weight(&self, o: usize, c: usize, ky: usize, kx: usize) -> f64 {
        self.w.data()[((o * self.in_channels() + c) * 3 + ky) * 3 + kx]
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        if input.rank() != 3 || input.shape()[0] != self.in_channels() {
            return Err(Error::shape(format!(
                "conv expects [{}, H, W] input, got {:?}",
                self.in_channels(),
                input.shape()
            )));
        }
        let (ci, h, w) = dims(input);
        let co = self.out_channels();
        let x = input.data();
        let mut out = Tensor::zeros(&[co, h, w]);
        let y = out.data_mut();
        for o in 0..co {
            let bias = self.b.data()[o];
            y[o * h * w..(o + 1) * h * w].iter_mut().for_each(|v| *v = bias);
            for c in 0..ci {
                let plane = &x[c * h * w..(c + 1) * h * w];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let k = self.weight(o, c, ky, kx);
                        for r in 0..h {
                            let sr = r as isize + ky as isize - 1;
                            if sr < 0 || sr >= h as isize {
                                continue;
                            }
                            let src = &plane[sr as usize * w..(sr as usize + 1) * w];
                            let dst = &mut y[(o * h + r) * w..(o * h + r + 1) * w];
                            let (lo, hi) = match kx {
                                0 => (1, w),
                                1 => (0, w),
                                _ => (0, w - 1),
                            };
                            for col in lo..hi {
                                dst[col] += k * src[col + kx - 1];
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Accumulates parameter gradients and returns `dL/d input`.
    pub fn backward(&self, input: &Tensor, d_out: &Tensor, grad: &mut Conv2d) -> Tensor {
        let (ci, h, w) = dims(input);
        let co = self.out_channels();
        let x = input.data();
        let dy = d_out.data();
        let mut d_in = input.zeros_like();
        for o in 0..co {
            let dplane = &dy[o * h * w..(o + 1) * h * w];
            grad.b.data_mut()[o] += dplane.iter().sum::<f64>();
            for c in 0..ci {
                let plane = &x[c * h * w..(c + 1) * h * w];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let k = self.weight(o, c, ky, kx);
                        let mut gk = 0.0;
                        let (lo, hi) = match kx {
                            0 => (1, w),
                            1 => (0, w),
                            _ => (0, w - 1),
                        };
                        for r in 0..h {
                            let sr = r as isize + ky as isize - 1;
                            if sr < 0 || sr >= h as isize {
                                continue;
                            }
                            let sr = sr as usize;
                            let di = &mut d_in.data_mut()[(c * h + sr) * w..(c * h + sr + 1) * w];
                            for col in lo..hi {
                                let g = dplane[r * w + col];
                                gk += g * plane[sr * w + col + kx - 1];
                                di[col + kx - 1] += k * g;
                            }
                        }
                        grad.w.data_mut()[((o * ci + c) * 3 + ky) * 3 + kx] += gk;
                    }
                }
            }
        }
        d_in
    }
}

impl Parameterized for Conv2d {
    fn params(&self) -> Vec<(String, &Tensor)> {
        vec![("w".into(), &self.w), ("b".into(), &self.b)]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w, &mut self.b]
    }
}

/// Elementwise ReLU, recording kink proximity in `probe`.
pub fn relu_map(x: &Tensor, probe: &mut KinkProbe) -> Tensor {
    let mut out = x.clone();
    for v in out.data_mut() {
        probe.relu(*v);
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

pub fn relu_backward(pre: &Tensor, d_out: &Tensor) -> Tensor {
    let mut d = d_out.clone();
    for (g, &p) in d.data_mut().iter_mut().zip(pre.data()) {
        if p <= 0.0 {
            *g = 0.0;
        }
    }
    d
}

/// 2×2 stride-2 max pooling. Odd trailing rows/columns are dropped.
/// Returns the pooled map and the flat source index of every winner.
pub fn maxpool2(x: &Tensor, probe: &mut KinkProbe) -> (Tensor, Vec<usize>) {
    let (c, h, w) = dims(x);
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(&[c, oh.max(1), ow.max(1)]);
    let mut arg = Vec::with_capacity(c * oh * ow);
    let src = x.data();
    for ch in 0..c {
        for r in 0..oh {
            for col in 0..ow {
                let mut best = usize::MAX;
                let mut top = f64::NEG_INFINITY;
                let mut second = f64::NEG_INFINITY;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let idx = (ch * h + 2 * r + dy) * w + 2 * col + dx;
                        let v = src[idx];
                        if v > top {
                            second = top;
                            top = v;
                            best = idx;
                        } else if v > second {
                            second = v;
                        }
                    }
                }
                // Ties among all-zero ReLU outputs carry no gradient either way.
                let gap = if top == 0.0 && second == 0.0 { f64::INFINITY } else { top - second };
                probe.pool(best % 4, gap);
                out.data_mut()[(ch * oh + r) * ow + col] = top;
                arg.push(best);
            }
        }
    }
    (out, arg)
}

pub fn maxpool2_backward(input_shape: &[usize], argmax: &[usize], d_out: &Tensor) -> Tensor {
    let mut d = Tensor::zeros(input_shape);
    for (&idx, &g) in argmax.iter().zip(d_out.data()) {
        d.data_mut()[idx] += g;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_matches_direct_sum() {
        let mut init = Init::new(3);
        let conv = Conv2d::new(&mut init, 2, 3);
        let mut x = Tensor::zeros(&[2, 5, 4]);
        for (i, v) in x.data_mut().iter_mut().enumerate() {
            *v = (i as f64 * 0.37).sin();
        }
        let y = conv.forward(&x).unwrap();
        for o in 0..3 {
            for r in 0..5isize {
                for c in 0..4isize {
                    let mut s = conv.b.data()[o];
                    for ci in 0..2 {
                        for ky in 0..3isize {
                            for kx in 0..3isize {
                                let (sr, sc) = (r + ky - 1, c + kx - 1);
                                if (0..5).contains(&sr) && (0..4).contains(&sc) {
                                    s += conv.weight(o, ci, ky as usize, kx as usize)
                                        * x.data()[(ci * 5 + sr as usize) * 4 + sc as usize];
                                }
                            }
                        }
                    }
                    let got = y.data()[(o * 5 + r as usize) * 4 + c as usize];
                    assert!((got - s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn maxpool_selects_window_maximum() {
        let x = Tensor::from_vec(&[1, 2, 4], vec![1.0, 5.0, 2.0, 0.0, 3.0, 4.0, 7.0, 1.0]).unwrap();
        let (y, arg) = maxpool2(&x, &mut KinkProbe::new());
        assert_eq!(y.data(), &[5.0, 7.0]);
        assert_eq!(arg, vec![1, 6]);
    }
}
