//! Independent oracles shared by the integration tests.
//!
//! The Riemannian oracle works from the position-only metric `a_ij(x)`:
//! Christoffel symbols of the second kind and the usual Riemann tensor,
//! with no reference to sprays, nonlinear connections or horizontal frames.

#![allow(dead_code)]

use finsler::jet::JetSpace;
use finsler::metric::MetricField;
use finsler::ChartPoint;
use nalgebra::DMatrix;

/// Christoffel symbols `Γ^i_jk` and the Riemann tensor
/// `R^i_hjk = ∂_jΓ^i_kh − ∂_kΓ^i_jh + Γ^i_jm Γ^m_kh − Γ^i_km Γ^m_jh`.
pub struct RiemannOracle {
    pub n: usize,
    pub a: DMatrix<f64>,
    pub a_inv: DMatrix<f64>,
    pub gamma: Vec<f64>,
    pub riemann: Vec<f64>,
}

impl RiemannOracle {
    pub fn gamma(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gamma[(i * self.n + j) * self.n + k]
    }

    pub fn riemann(&self, i: usize, h: usize, j: usize, k: usize) -> f64 {
        let n = self.n;
        self.riemann[((i * n + h) * n + j) * n + k]
    }

    /// `Ric_hk = R^i_hik`.
    pub fn ricci(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |h, k| (0..self.n).map(|i| self.riemann(i, h, i, k)).sum())
    }

    pub fn scalar(&self) -> f64 {
        let ric = self.ricci();
        (0..self.n)
            .flat_map(|h| (0..self.n).map(move |k| (h, k)))
            .map(|(h, k)| self.a_inv[(h, k)] * ric[(h, k)])
            .sum()
    }
}

pub fn riemann_oracle(a: &MetricField, x: &[f64]) -> RiemannOracle {
    let n = x.len();
    let space = JetSpace::new(n, 2);
    let vars: Vec<_> = x.iter().enumerate().map(|(i, &v)| space.variable(i, v)).collect();
    let m = a.eval(&vars);
    let val = DMatrix::from_fn(n, n, |i, j| m[i][j].value());
    let inv = val.clone().try_inverse().expect("invertible metric");
    let d1 = |i: usize, j: usize, p: usize| m[i][j].partial(&[p]);
    let d2 = |i: usize, j: usize, p: usize, q: usize| m[i][j].partial(&[p, q]);

    // first kind Γ_ljk and its derivative ∂_p Γ_ljk
    let first = |l: usize, j: usize, k: usize| 0.5 * (d1(l, k, j) + d1(j, l, k) - d1(j, k, l));
    let first_d = |l: usize, j: usize, k: usize, p: usize| {
        0.5 * (d2(l, k, j, p) + d2(j, l, k, p) - d2(j, k, l, p))
    };
    // ∂_p a^{il} = −a^{is} ∂_p a_st a^{tl}
    let inv_d = |i: usize, l: usize, p: usize| {
        let mut s = 0.0;
        for u in 0..n {
            for t in 0..n {
                s -= inv[(i, u)] * d1(u, t, p) * inv[(t, l)];
            }
        }
        s
    };

    let idx3 = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut gamma = vec![0.0; n * n * n];
    // dgamma[(i,j,k) * n + p] = ∂_p Γ^i_jk
    let mut dgamma = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut g = 0.0;
                for l in 0..n {
                    g += inv[(i, l)] * first(l, j, k);
                }
                gamma[idx3(i, j, k)] = g;
                for p in 0..n {
                    let mut dg = 0.0;
                    for l in 0..n {
                        dg += inv_d(i, l, p) * first(l, j, k) + inv[(i, l)] * first_d(l, j, k, p);
                    }
                    dgamma[idx3(i, j, k) * n + p] = dg;
                }
            }
        }
    }
    let g = |i: usize, j: usize, k: usize| gamma[idx3(i, j, k)];
    let dg = |i: usize, j: usize, k: usize, p: usize| dgamma[idx3(i, j, k) * n + p];
    let mut riemann = vec![0.0; n * n * n * n];
    for i in 0..n {
        for h in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = dg(i, k, h, j) - dg(i, j, h, k);
                    for mm in 0..n {
                        r += g(i, j, mm) * g(mm, k, h) - g(i, k, mm) * g(mm, j, h);
                    }
                    riemann[((i * n + h) * n + j) * n + k] = r;
                }
            }
        }
    }
    RiemannOracle {
        n,
        a: val,
        a_inv: inv,
        gamma,
        riemann,
    }
}

/// Closed form for the unit sphere in stereographic coordinates:
/// `R^i_hjk = δ^i_j a_hk − δ^i_k a_hj` with `a = 4/(1+|x|²)² I`.
pub fn sphere_riemann(x: &[f64], i: usize, h: usize, j: usize, k: usize) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let c = 4.0 / (1.0 + r2).powi(2);
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    d(i, j) * c * d(h, k) - d(i, k) * c * d(h, j)
}

/// A planar metric of non-constant curvature, positive definite on `[-1, 1]²`.
pub fn warped_plane() -> MetricField {
    MetricField::new(|x| {
        let a00 = 1.0 + &(&x[1] * &x[1]) * 0.3;
        let a01 = &(&x[0] * &x[1]) * 0.1;
        let a11 = (&x[0] * 0.2).exp();
        vec![vec![a00, a01.clone()], vec![a01, a11]]
    })
}

/// A three-dimensional metric with position-dependent off-diagonal terms.
pub fn warped_space() -> MetricField {
    MetricField::new(|x| {
        let one = x[0].constant_like(1.0);
        let a00 = 1.0 + &(&x[1] * &x[1]) * 0.2;
        let a11 = (&x[2] * 0.3).exp();
        let a22 = 1.5 + &(&x[0] * &x[0]) * 0.25;
        let a01 = &x[2] * 0.1;
        let a12 = &(&x[0] * &x[1]) * 0.05;
        let a02 = &one * 0.05;
        vec![
            vec![a00, a01.clone(), a02.clone()],
            vec![a01, a11, a12.clone()],
            vec![a02, a12, a22],
        ]
    })
}

pub fn point(x: &[f64], y: &[f64]) -> ChartPoint {
    ChartPoint::new(x.to_vec(), y.to_vec()).expect("valid point")
}

/// Central-difference Richardson derivative of a plain function.
pub fn fd1<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    let c = |h: f64| (f(t + h) - f(t - h)) / (2.0 * h);
    (4.0 * c(h / 2.0) - c(h)) / 3.0
}
