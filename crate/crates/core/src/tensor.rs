//! Small dense component arrays and matrix helpers over jets.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{FinslerError, Result};
use crate::jet::Jet;
use crate::point::ChartPoint;

/// Refusal threshold for the metric's condition number.
pub const MAX_CONDITION: f64 = 1e12;

/// Rank-3 component array `T[a][b][c]`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_fn<F: FnMut(usize, usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut t = Self::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    t.data[(a * n + b) * n + c] = f(a, b, c);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.n + b) * self.n + c]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.n + b) * self.n + c] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Rank-4 component array `T[a][b][c][d]`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn from_fn<F: FnMut(usize, usize, usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(n.pow(4));
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        data.push(f(a, b, c, d));
                    }
                }
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[((a * self.n + b) * self.n + c) * self.n + d]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

pub fn values(m: &[Vec<Jet>]) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j].value())
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Spectral condition number of a symmetric positive-definite matrix, or
/// `SingularMetric` when it is indefinite or worse conditioned than [`MAX_CONDITION`].
pub fn spd_condition(g: &DMatrix<f64>, p: &ChartPoint) -> Result<f64> {
    let eig = SymmetricEigen::new(g.clone());
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    if !(lo > 0.0) {
        return Err(FinslerError::SingularMetric {
            point: p.to_string(),
            reason: format!("metric not positive-definite (smallest eigenvalue {lo:e})"),
        });
    }
    let cond = hi / lo;
    if cond > MAX_CONDITION {
        return Err(FinslerError::SingularMetric {
            point: p.to_string(),
            reason: format!("condition number {cond:e} exceeds {MAX_CONDITION:e}"),
        });
    }
    Ok(cond)
}

pub fn mat_mul(a: &[Vec<Jet>], b: &[Vec<Jet>]) -> Vec<Vec<Jet>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = &a[i][0] * &b[0][j];
                    for k in 1..n {
                        acc += &a[i][k] * &b[k][j];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Inverse of a jet-valued matrix whose value part is invertible.
///
/// With `M = M₀ + D` (`D` nilpotent of index `order + 1`), the Neumann series
/// `Σ_k (−M₀⁻¹D)^k M₀⁻¹` terminates after `order` terms.
pub fn invert(m: &[Vec<Jet>], p: &ChartPoint) -> Result<Vec<Vec<Jet>>> {
    let n = m.len();
    let m0 = values(m);
    let inv0 = m0.clone().try_inverse().ok_or_else(|| FinslerError::SingularMetric {
        point: p.to_string(),
        reason: "matrix not invertible".into(),
    })?;
    let proto = &m[0][0];
    let order = proto.order();
    let inv0_jet: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| proto.constant_like(inv0[(i, j)])).collect())
        .collect();
    // step = −M₀⁻¹ D
    let d: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| &m[i][j] - m0[(i, j)]).collect())
        .collect();
    let step: Vec<Vec<Jet>> = mat_mul(&inv0_jet, &d)
        .into_iter()
        .map(|row| row.into_iter().map(|v| -v).collect())
        .collect();
    let mut term = inv0_jet.clone();
    let mut acc = inv0_jet;
    for _ in 0..order {
        term = mat_mul(&step, &term);
        for i in 0..n {
            for j in 0..n {
                acc[i][j] += &term[i][j];
            }
        }
    }
    Ok(acc)
}
