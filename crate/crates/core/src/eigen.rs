//! Dense real symmetric matrices and a cyclic Jacobi eigensolver.
//!
//! Chains here are at most a few hundred sites, so the O(N³) per sweep cost
//! is irrelevant next to the accuracy Jacobi gives on small eigenvalues.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float;

use crate::{Error, Result};

/// Row-major square matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::CouplingCount { expected: dim * dim, got: data.len() });
        }
        let m = Self { dim, data };
        m.check_symmetric(1e-12)?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Fails on the first pair whose asymmetry exceeds `tol` (relative to the largest entry).
    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        let scale = self.data.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for row in 0..self.dim {
            for col in row + 1..self.dim {
                let deviation = (self.get(row, col) - self.get(col, row)).abs();
                if deviation > tol * scale || deviation.is_nan() {
                    return Err(Error::NotSymmetric { row, col, deviation });
                }
            }
        }
        Ok(())
    }
}

/// Eigenpairs sorted by ascending eigenvalue. Column k of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Row-major `dim × dim`; entry `(i, k)` is component i of eigenvector k.
    pub vectors: Vec<f64>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi diagonalization of a symmetric matrix.
pub fn symmetric_eigen(matrix: &SymmetricMatrix) -> Result<Eigen> {
    matrix.check_symmetric(1e-12)?;
    let n = matrix.dim();
    let mut a = matrix.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |s, x| s + x * x).sqrt();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off.sqrt() <= f64::EPSILON * 1e-3 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_k] = v[i * n + old_k];
        }
    }
    Ok(Eigen { values, vectors })
}
