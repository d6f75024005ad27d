//! Dense order-k tensors over `R^d` and the inner products used by the bounds.

use crate::error::{Error, Result};
use crate::hermite::factorial;

/// Largest number of stored entries accepted.
pub const MAX_ENTRIES: usize = 1 << 30;

/// Dense tensor of order `k` over `d` coordinates, row-major (first index
/// most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensor {
    order: usize,
    dim: usize,
    data: Vec<f64>,
}

fn checked_len(order: usize, dim: usize) -> Result<usize> {
    let mut len: usize = 1;
    for _ in 0..order {
        len = len
            .checked_mul(dim)
            .filter(|&l| l <= MAX_ENTRIES)
            .ok_or(Error::SizeCap {
                what: "tensor",
                size: usize::MAX,
                cap: MAX_ENTRIES,
            })?;
    }
    Ok(len)
}

impl SymmetricTensor {
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        if order == 0 || dim == 0 {
            return Err(crate::error::invalid("tensor", "order and dimension must be >= 1"));
        }
        let len = checked_len(order, dim)?;
        Ok(Self {
            order,
            dim,
            data: vec![0.0; len],
        })
    }

    pub fn from_vec(order: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        let mut t = Self::zeros(order, dim)?;
        if data.len() != t.data.len() {
            return Err(Error::DimensionMismatch {
                expected: t.data.len(),
                got: data.len(),
            });
        }
        t.data = data;
        Ok(t)
    }

    /// `d x d` identity.
    pub fn identity(dim: usize) -> Result<Self> {
        let mut t = Self::zeros(2, dim)?;
        for j in 0..dim {
            t.data[j * dim + j] = 1.0;
        }
        Ok(t)
    }

    /// `v^{⊗k}`.
    pub fn outer_power(v: &[f64], k: usize) -> Result<Self> {
        let mut t = Self::zeros(k, v.len())?;
        outer_power_into(v, k, &mut t.data);
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.order);
        let flat = index.iter().fold(0, |acc, &i| acc * self.dim + i);
        self.data[flat]
    }

    /// Hilbert–Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `‖M‖_H`, weighting entry `(j, i)` by `E[H_i^2]` of its trailing `k-1` indices.
    pub fn h_norm(&self) -> f64 {
        let w = hermite_weights(self.order, self.dim);
        weighted_dot(&self.data, &self.data, &w).sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += c * b);
    }

    /// `<x, A^{⊗k} y>` for a symmetric `d x d` matrix `a` in row-major order.
    pub fn a_dot(&self, other: &Self, a: &[f64]) -> f64 {
        let mut tmp = Vec::new();
        let mut scratch = Vec::new();
        a_dot_flat(&self.data, &other.data, self.order, self.dim, a, &mut tmp, &mut scratch)
    }
}

pub(crate) fn outer_power_into(v: &[f64], k: usize, out: &mut [f64]) {
    let d = v.len();
    out[0] = 1.0;
    let mut len = 1;
    for _ in 0..k {
        // expand in place from the back so sources are not overwritten
        for idx in (0..len).rev() {
            let base = out[idx];
            for j in (0..d).rev() {
                out[idx * d + j] = base * v[j];
            }
        }
        len *= d;
    }
}

/// Weights `E[H_i^2]` indexed by `flat % d^{k-1}` (the trailing `k-1` indices).
pub fn hermite_weights(order: usize, dim: usize) -> Vec<f64> {
    let tail = dim.pow(order.saturating_sub(1) as u32);
    let mut counts = vec![0usize; dim];
    (0..tail)
        .map(|mut r| {
            counts.iter_mut().for_each(|c| *c = 0);
            for _ in 0..order.saturating_sub(1) {
                counts[r % dim] += 1;
                r /= dim;
            }
            counts.iter().map(|&c| factorial(c)).product()
        })
        .collect()
}

pub(crate) fn weighted_dot(x: &[f64], y: &[f64], tail_weights: &[f64]) -> f64 {
    let tail = tail_weights.len();
    x.chunks(tail)
        .zip(y.chunks(tail))
        .map(|(a, b)| a.iter().zip(b).zip(tail_weights).map(|((a, b), w)| w * a * b).sum::<f64>())
        .sum()
}

/// `<x, A^{⊗k} y>` on flat buffers.
pub(crate) fn a_dot_flat(
    x: &[f64],
    y: &[f64],
    order: usize,
    dim: usize,
    a: &[f64],
    tmp: &mut Vec<f64>,
    scratch: &mut Vec<f64>,
) -> f64 {
    tmp.clear();
    tmp.extend_from_slice(y);
    scratch.resize(y.len(), 0.0);
    for mode in 0..order {
        let inner = dim.pow((order - 1 - mode) as u32);
        let outer = y.len() / (inner * dim);
        for o in 0..outer {
            for r in 0..dim {
                for i in 0..inner {
                    let mut acc = 0.0;
                    for c in 0..dim {
                        acc += a[r * dim + c] * tmp[(o * dim + c) * inner + i];
                    }
                    scratch[(o * dim + r) * inner + i] = acc;
                }
            }
        }
        std::mem::swap(tmp, scratch);
    }
    x.iter().zip(tmp.iter()).map(|(a, b)| a * b).sum()
}
