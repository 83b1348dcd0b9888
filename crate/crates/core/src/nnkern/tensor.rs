use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense row-major `f64` array with a fixed shape.
///
/// Every extent is positive and `shape.iter().product() == data.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        assert!(
            !shape.is_empty() && shape.iter().all(|&d| d > 0),
            "tensor extents must be positive: {shape:?}"
        );
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::shape(format!("extents must be positive, got {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} holds {n} values but {} were given",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Number of rows of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Number of columns of a rank-2 tensor (product of trailing extents).
    pub fn cols(&self) -> usize {
        self.data.len() / self.shape[0]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }
}

/// `out += W x` for a rank-2 `W`.
pub fn matvec_acc(w: &Tensor, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.cols(), x.len());
    debug_assert_eq!(w.rows(), out.len());
    for (r, o) in out.iter_mut().enumerate() {
        *o += dot(w.row(r), x);
    }
}

/// `out += Wᵀ dy`.
pub fn matvec_t_acc(w: &Tensor, dy: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.rows(), dy.len());
    debug_assert_eq!(w.cols(), out.len());
    for (r, &d) in dy.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(w.row(r)) {
            *o += wv * d;
        }
    }
}

/// `G += dy xᵀ`.
pub fn outer_acc(g: &mut Tensor, dy: &[f64], x: &[f64]) {
    debug_assert_eq!(g.rows(), dy.len());
    debug_assert_eq!(g.cols(), x.len());
    for (r, &d) in dy.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        for (gv, &xv) in g.row_mut(r).iter_mut().zip(x) {
            *gv += d * xv;
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_arity() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(matches!(
            Tensor::from_vec(&[2, 3], vec![0.0; 5]),
            Err(Error::Shape(_))
        ));
        assert!(Tensor::from_vec(&[0, 3], vec![]).is_err());
    }

    #[test]
    fn matvec_kernels_agree_with_loops() {
        let w = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut y = [0.0; 2];
        matvec_acc(&w, &[1.0, 0.0, -1.0], &mut y);
        assert_eq!(y, [-2.0, -2.0]);
        let mut x = [0.0; 3];
        matvec_t_acc(&w, &[1.0, 1.0], &mut x);
        assert_eq!(x, [5.0, 7.0, 9.0]);
        let mut g = Tensor::zeros(&[2, 3]);
        outer_acc(&mut g, &[1.0, 2.0], &[1.0, 0.0, 3.0]);
        assert_eq!(g.data(), &[1.0, 0.0, 3.0, 2.0, 0.0, 6.0]);
    }
}
