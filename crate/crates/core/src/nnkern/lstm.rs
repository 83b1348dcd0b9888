//! LSTM cell, unidirectional sequence pass and bi-directional encoder.
//!
//! Gate equations, with `σ` the logistic function:
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)    f = σ(W_f x + U_f h + b_f)
//! o = σ(W_o x + U_o h + b_o)    g = tanh(W_g x + U_g h + b_g)
//! c' = f ⊙ c + i ⊙ g            h' = o ⊙ tanh(c')
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::params::{prefixed, Init, Parameterized};
use super::tensor::{matvec_acc, matvec_t_acc, outer_acc, Tensor};
use crate::math;
use crate::{Error, Result};

/// Input weights `W: [H, I]`, recurrent weights `U: [H, H]` and bias for one gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub w_x: Tensor,
    pub w_h: Tensor,
    pub b: Tensor,
}

impl GateParams {
    fn new(init: &mut Init, input: usize, hidden: usize) -> Self {
        GateParams {
            w_x: init.glorot(&[hidden, input], input, hidden),
            w_h: init.glorot(&[hidden, hidden], hidden, hidden),
            b: init.zeros(&[hidden]),
        }
    }

    fn preactivation(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut a = self.b.data().to_vec();
        matvec_acc(&self.w_x, x, &mut a);
        matvec_acc(&self.w_h, h, &mut a);
        a
    }

    fn accumulate(&self, da: &[f64], x: &[f64], h_prev: &[f64], grad: &mut GateParams, dx: &mut [f64], dh: &mut [f64]) {
        outer_acc(&mut grad.w_x, da, x);
        outer_acc(&mut grad.w_h, da, h_prev);
        for (g, d) in grad.b.data_mut().iter_mut().zip(da) {
            *g += d;
        }
        matvec_t_acc(&self.w_x, da, dx);
        matvec_t_acc(&self.w_h, da, dh);
    }
}

impl Parameterized for GateParams {
    fn params(&self) -> Vec<(String, &Tensor)> {
        vec![("w_x".into(), &self.w_x), ("w_h".into(), &self.w_h), ("b".into(), &self.b)]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w_x, &mut self.w_h, &mut self.b]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input: GateParams,
    pub forget: GateParams,
    pub output: GateParams,
    pub cell: GateParams,
}

impl LstmParams {
    pub fn new(init: &mut Init, input: usize, hidden: usize) -> Self {
        LstmParams {
            input: GateParams::new(init, input, hidden),
            forget: GateParams::new(init, input, hidden),
            output: GateParams::new(init, input, hidden),
            cell: GateParams::new(init, input, hidden),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input.w_x.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.input.w_x.rows()
    }

    fn check(&self, x: &[f64], h: &[f64], c: &[f64]) -> Result<()> {
        let (i, hd) = (self.input_dim(), self.hidden_dim());
        if x.len() != i || h.len() != hd || c.len() != hd {
            return Err(Error::shape(format!(
                "lstm expects x:{i} h:{hd} c:{hd}, got x:{} h:{} c:{}",
                x.len(),
                h.len(),
                c.len()
            )));
        }
        Ok(())
    }
}

impl Parameterized for LstmParams {
    fn params(&self) -> Vec<(String, &Tensor)> {
        let mut v = prefixed("i", self.input.params());
        v.extend(prefixed("f", self.forget.params()));
        v.extend(prefixed("o", self.output.params()));
        v.extend(prefixed("g", self.cell.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.input.params_mut();
        v.extend(self.forget.params_mut());
        v.extend(self.output.params_mut());
        v.extend(self.cell.params_mut());
        v
    }
}

/// Everything one step needs for its backward pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub o: Vec<f64>,
    pub g: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// One LSTM step. Returns `(h, c)`.
pub fn lstm_step(x: &[f64], h_prev: &[f64], c_prev: &[f64], p: &LstmParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let cache = step_cached(x, h_prev, c_prev, p)?;
    Ok((cache.h, cache.c))
}

pub fn step_cached(x: &[f64], h_prev: &[f64], c_prev: &[f64], p: &LstmParams) -> Result<StepCache> {
    p.check(x, h_prev, c_prev)?;
    let sig = |v: Vec<f64>| v.into_iter().map(math::sigmoid).collect::<Vec<_>>();
    let i = sig(p.input.preactivation(x, h_prev));
    let f = sig(p.forget.preactivation(x, h_prev));
    let o = sig(p.output.preactivation(x, h_prev));
    let g: Vec<f64> = p.cell.preactivation(x, h_prev).into_iter().map(math::tanh).collect();
    let c: Vec<f64> = (0..c_prev.len()).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|&v| math::tanh(v)).collect();
    let h = o.iter().zip(&tanh_c).map(|(o, t)| o * t).collect();
    Ok(StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        i,
        f,
        o,
        g,
        c,
        tanh_c,
        h,
    })
}

/// Backward through one step.
///
/// `dh` and `dc` are the total gradients arriving at this step's outputs.
/// Returns `(dx, dh_prev, dc_prev)`.
pub fn step_backward(p: &LstmParams, s: &StepCache, dh: &[f64], dc: &[f64], grad: &mut LstmParams) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = s.h.len();
    let mut da_i = vec![0.0; n];
    let mut da_f = vec![0.0; n];
    let mut da_o = vec![0.0; n];
    let mut da_g = vec![0.0; n];
    let mut dc_prev = vec![0.0; n];
    for k in 0..n {
        let d_o = dh[k] * s.tanh_c[k];
        let dct = dc[k] + dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
        let d_i = dct * s.g[k];
        let d_g = dct * s.i[k];
        let d_f = dct * s.c_prev[k];
        dc_prev[k] = dct * s.f[k];
        da_i[k] = d_i * s.i[k] * (1.0 - s.i[k]);
        da_f[k] = d_f * s.f[k] * (1.0 - s.f[k]);
        da_o[k] = d_o * s.o[k] * (1.0 - s.o[k]);
        da_g[k] = d_g * (1.0 - s.g[k] * s.g[k]);
    }
    let mut dx = vec![0.0; s.x.len()];
    let mut dh_prev = vec![0.0; n];
    p.input.accumulate(&da_i, &s.x, &s.h_prev, &mut grad.input, &mut dx, &mut dh_prev);
    p.forget.accumulate(&da_f, &s.x, &s.h_prev, &mut grad.forget, &mut dx, &mut dh_prev);
    p.output.accumulate(&da_o, &s.x, &s.h_prev, &mut grad.output, &mut dx, &mut dh_prev);
    p.cell.accumulate(&da_g, &s.x, &s.h_prev, &mut grad.cell, &mut dx, &mut dh_prev);
    (dx, dh_prev, dc_prev)
}

/// Runs the cell over `seq` from zero initial state.
pub fn lstm_forward(p: &LstmParams, seq: &[Vec<f64>]) -> Result<Vec<StepCache>> {
    let n = p.hidden_dim();
    let mut h = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut caches = Vec::with_capacity(seq.len());
    for x in seq {
        let s = step_cached(x, &h, &c, p)?;
        h.clone_from(&s.h);
        c.clone_from(&s.c);
        caches.push(s);
    }
    Ok(caches)
}

/// Backpropagation through time. `dhs[t]` is the external gradient on `h_t`.
/// Returns the gradient on each input.
pub fn lstm_backward(p: &LstmParams, caches: &[StepCache], dhs: &[Vec<f64>], grad: &mut LstmParams) -> Vec<Vec<f64>> {
    let n = p.hidden_dim();
    let mut dh_next = vec![0.0; n];
    let mut dc_next = vec![0.0; n];
    let mut dxs = vec![Vec::new(); caches.len()];
    for t in (0..caches.len()).rev() {
        let dh: Vec<f64> = dhs[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
        let (dx, dh_prev, dc_prev) = step_backward(p, &caches[t], &dh, &dc_next, grad);
        dxs[t] = dx;
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    dxs
}

/// Forward and backward LSTMs whose outputs are concatenated per position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstm {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

impl BiLstm {
    pub fn new(init: &mut Init, input: usize, hidden: usize) -> Self {
        BiLstm {
            forward: LstmParams::new(init, input, hidden),
            backward: LstmParams::new(init, input, hidden),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.forward.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.forward.hidden_dim()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden_dim()
    }
}

impl Parameterized for BiLstm {
    fn params(&self) -> Vec<(String, &Tensor)> {
        let mut v = prefixed("fwd", self.forward.params());
        v.extend(prefixed("bwd", self.backward.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.forward.params_mut();
        v.extend(self.backward.params_mut());
        v
    }
}

#[derive(Debug, Clone)]
pub struct BiLstmCache {
    forward: Vec<StepCache>,
    /// Caches of the backward cell, in processing order (last position first).
    backward: Vec<StepCache>,
}

/// Encodes `seq` into `concat(forward h_t, backward h_t)` per position.
pub fn bilstm_encode(seq: &[Vec<f64>], p: &BiLstm) -> Result<Vec<Vec<f64>>> {
    Ok(bilstm_forward(seq, p)?.0)
}

pub fn bilstm_forward(seq: &[Vec<f64>], p: &BiLstm) -> Result<(Vec<Vec<f64>>, BiLstmCache)> {
    if seq.is_empty() {
        return Err(Error::EmptyInput);
    }
    let fwd = lstm_forward(&p.forward, seq)?;
    let reversed: Vec<Vec<f64>> = seq.iter().rev().cloned().collect();
    let bwd = lstm_forward(&p.backward, &reversed)?;
    let len = seq.len();
    let out = (0..len)
        .map(|t| {
            let mut v = fwd[t].h.clone();
            v.extend_from_slice(&bwd[len - 1 - t].h);
            v
        })
        .collect();
    Ok((out, BiLstmCache { forward: fwd, backward: bwd }))
}

/// Returns the gradient on each input position.
pub fn bilstm_backward(p: &BiLstm, cache: &BiLstmCache, d_out: &[Vec<f64>], grad: &mut BiLstm) -> Vec<Vec<f64>> {
    let len = d_out.len();
    let hd = p.hidden_dim();
    let d_fwd: Vec<Vec<f64>> = d_out.iter().map(|d| d[..hd].to_vec()).collect();
    let d_bwd: Vec<Vec<f64>> = (0..len).map(|s| d_out[len - 1 - s][hd..].to_vec()).collect();
    let mut dx = lstm_backward(&p.forward, &cache.forward, &d_fwd, &mut grad.forward);
    let dx_rev = lstm_backward(&p.backward, &cache.backward, &d_bwd, &mut grad.backward);
    for (t, d) in dx.iter_mut().enumerate() {
        for (a, b) in d.iter_mut().zip(&dx_rev[len - 1 - t]) {
            *a += b;
        }
    }
    dx
}
