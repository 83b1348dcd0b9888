use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::params::{Init, Parameterized};
use super::tensor::{matvec_acc, matvec_t_acc, outer_acc, Tensor};
use crate::{Error, Result};

/// Fully connected layer `y = W x + b` with `W: [out, in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Tensor,
    pub b: Tensor,
}

impl Dense {
    pub fn new(init: &mut Init, input: usize, output: usize) -> Self {
        Dense {
            w: init.glorot(&[output, input], input, output),
            b: init.zeros(&[output]),
        }
    }

    pub fn from_parts(w: Tensor, b: Tensor) -> Result<Self> {
        if w.rank() != 2 || b.rank() != 1 || b.len() != w.rows() {
            return Err(Error::shape(format!(
                "dense weight {:?} and bias {:?} disagree",
                w.shape(),
                b.shape()
            )));
        }
        Ok(Dense { w, b })
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(format!(
                "dense layer expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut y = self.b.data().to_vec();
        matvec_acc(&self.w, x, &mut y);
        Ok(y)
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense) -> Vec<f64> {
        outer_acc(&mut grad.w, dy, x);
        for (g, d) in grad.b.data_mut().iter_mut().zip(dy) {
            *g += d;
        }
        let mut dx = vec![0.0; x.len()];
        matvec_t_acc(&self.w, dy, &mut dx);
        dx
    }
}

impl Parameterized for Dense {
    fn params(&self) -> Vec<(String, &Tensor)> {
        vec![("w".into(), &self.w), ("b".into(), &self.b)]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w, &mut self.b]
    }
}
