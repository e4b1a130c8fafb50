//! Per-point jet tower: every connection-level object of a Finsler structure
//! at one point, kept as jets so that horizontal derivatives of it can be taken.
//!
//! Depth budget, starting from `L` at order 4:
//!
//! | object | formula | order |
//! |---|---|---|
//! | `E` | `½L²` | 4 |
//! | `g_ij`, `g^ij` | `∂̇_i∂̇_j E` | 2 |
//! | `G^i` | `½ g^{im}(y^j ∂_j∂̇_m E − ∂_m E)` | 2 |
//! | `N^i_j` | `∂̇_j G^i` | 1 |
//! | `C_ijk`, `C^i_jk` | `½∂̇_k g_ij` | 1 |
//! | `F^i_jk` | `½ g^{is}(δ_j g_sk + δ_k g_js − δ_s g_jk)` | 1 |
//!
//! Curvatures need one more horizontal derivative of `N` and `F` and so are
//! plain values.

use nalgebra::{DMatrix, DVector};

use crate::error::{FinslerError, Result};
use crate::field::chart_variables;
use crate::jet::{Jet, MAX_ORDER};
use crate::metric::{metric_jets, FinslerStructure};
use crate::point::ChartPoint;
use crate::tensor::{self, Tensor3};

pub struct LocalGeometry {
    point: ChartPoint,
    n: usize,
    x: Vec<Jet>,
    y: Vec<Jet>,
    l: Jet,
    e: Jet,
    g: Vec<Vec<Jet>>,
    g_inv: Vec<Vec<Jet>>,
    condition: f64,
    spray: Vec<Jet>,
    barthel: Vec<Vec<Jet>>,
    cartan_lower: Vec<Vec<Vec<Jet>>>,
    cartan_mixed: Vec<Vec<Vec<Jet>>>,
    coeffs: Vec<Vec<Vec<Jet>>>,
}

impl LocalGeometry {
    pub fn new(structure: &FinslerStructure, p: &ChartPoint) -> Result<Self> {
        structure.check_point(p)?;
        let n = p.dim();
        let (x, y) = chart_variables(p, MAX_ORDER);
        let mj = metric_jets(structure, &x, &y);
        let l = mj.l;
        if !(l.value() > 0.0) {
            return Err(FinslerError::SingularMetric {
                point: p.to_string(),
                reason: format!("Lagrangian not positive (L = {})", l.value()),
            });
        }
        let e = mj.e;
        let g = mj.g;
        let condition = tensor::spd_condition(&tensor::values(&g), p)?;
        let g_inv = tensor::invert(&g, p)?;

        let de_dx: Vec<Jet> = (0..n).map(|m| e.derivative(m)).collect();
        // rhs_m = y^j ∂²E/∂x^j∂y^m − ∂E/∂x^m
        let rhs: Vec<Jet> = (0..n)
            .map(|m| {
                let dym = e.derivative(n + m);
                let mut acc = -&de_dx[m];
                for j in 0..n {
                    acc += &y[j] * &dym.derivative(j);
                }
                acc
            })
            .collect();
        let spray: Vec<Jet> = (0..n)
            .map(|i| crate::jet::sum((0..n).map(|m| &g_inv[i][m] * &rhs[m])).scale(0.5))
            .collect();
        let barthel: Vec<Vec<Jet>> = (0..n)
            .map(|i| (0..n).map(|j| spray[i].derivative(n + j)).collect())
            .collect();

        let cartan_lower: Vec<Vec<Vec<Jet>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| g[i][j].derivative(n + k).scale(0.5)).collect())
                    .collect()
            })
            .collect();
        let cartan_mixed = raise_first(&g_inv, &cartan_lower);

        let mut geo = Self {
            point: p.clone(),
            n,
            x,
            y,
            l,
            e,
            g,
            g_inv,
            condition,
            spray,
            barthel,
            cartan_lower,
            cartan_mixed,
            coeffs: Vec::new(),
        };

        // dg[k][i][j] = δ_k g_ij
        let dg: Vec<Vec<Vec<Jet>>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| (0..n).map(|j| geo.delta(k, &geo.g[i][j])).collect())
                    .collect()
            })
            .collect();
        let christoffel_lower: Vec<Vec<Vec<Jet>>> = (0..n)
            .map(|s| {
                (0..n)
                    .map(|j| {
                        (0..n)
                            .map(|k| (&dg[j][s][k] + &dg[k][j][s] - &dg[s][j][k]).scale(0.5))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        geo.coeffs = raise_first(&geo.g_inv, &christoffel_lower);
        Ok(geo)
    }

    pub fn point(&self) -> &ChartPoint {
        &self.point
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Coordinate jets `x^i` at the top order.
    pub fn x(&self) -> &[Jet] {
        &self.x
    }

    /// Coordinate jets `y^i` at the top order.
    pub fn y(&self) -> &[Jet] {
        &self.y
    }

    /// Coordinate jets truncated to `order`.
    pub fn vars(&self, order: usize) -> (Vec<Jet>, Vec<Jet>) {
        (
            self.x.iter().map(|v| v.truncate(order)).collect(),
            self.y.iter().map(|v| v.truncate(order)).collect(),
        )
    }

    pub fn lagrangian(&self) -> &Jet {
        &self.l
    }

    pub fn energy(&self) -> &Jet {
        &self.e
    }

    pub fn metric(&self) -> &[Vec<Jet>] {
        &self.g
    }

    pub fn metric_inverse(&self) -> &[Vec<Jet>] {
        &self.g_inv
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn spray_jets(&self) -> &[Jet] {
        &self.spray
    }

    pub fn barthel_jets(&self) -> &[Vec<Jet>] {
        &self.barthel
    }

    /// `F^i_jk` as `[i][j][k]`.
    pub fn coefficient_jets(&self) -> &[Vec<Vec<Jet>>] {
        &self.coeffs
    }

    /// `C^i_jk` as `[i][j][k]`.
    pub fn cartan_mixed_jets(&self) -> &[Vec<Vec<Jet>>] {
        &self.cartan_mixed
    }

    /// `C_ijk` as `[i][j][k]`.
    pub fn cartan_lower_jets(&self) -> &[Vec<Vec<Jet>>] {
        &self.cartan_lower
    }

    /// Horizontal derivative `δ_i f = ∂f/∂x^i − N^m_i ∂f/∂y^m`; the result's
    /// order is capped by the order of `N`.
    pub fn delta(&self, i: usize, f: &Jet) -> Jet {
        let n = self.n;
        let mut out = f.derivative(i);
        for m in 0..n {
            out -= &self.barthel[m][i] * &f.derivative(n + m);
        }
        out
    }

    /// `∂f/∂y^i`.
    pub fn vertical(&self, i: usize, f: &Jet) -> Jet {
        f.derivative(self.n + i)
    }

    pub fn metric_value(&self) -> DMatrix<f64> {
        tensor::values(&self.g)
    }

    pub fn metric_inverse_value(&self) -> DMatrix<f64> {
        tensor::values(&self.g_inv)
    }

    pub fn spray_value(&self) -> DVector<f64> {
        DVector::from_iterator(self.n, self.spray.iter().map(Jet::value))
    }

    pub fn barthel_value(&self) -> DMatrix<f64> {
        tensor::values(&self.barthel)
    }

    pub fn coefficients_value(&self) -> Tensor3 {
        Tensor3::from_fn(self.n, |i, j, k| self.coeffs[i][j][k].value())
    }

    pub fn cartan_mixed_value(&self) -> Tensor3 {
        Tensor3::from_fn(self.n, |i, j, k| self.cartan_mixed[i][j][k].value())
    }

    pub fn ell_value(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| self.l.partial(&[self.n + i]))
    }

    pub fn y_value(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.point.y)
    }

    /// Lowers a vector of jets with `g`.
    pub fn lower(&self, v: &[Jet]) -> Vec<Jet> {
        (0..self.n)
            .map(|i| crate::jet::sum((0..self.n).map(|j| &self.g[i][j] * &v[j])))
            .collect()
    }

    /// Raises a covector of jets with `g⁻¹`.
    pub fn raise(&self, w: &[Jet]) -> Vec<Jet> {
        (0..self.n)
            .map(|i| crate::jet::sum((0..self.n).map(|j| &self.g_inv[i][j] * &w[j])))
            .collect()
    }
}

fn raise_first(g_inv: &[Vec<Jet>], t: &[Vec<Vec<Jet>>]) -> Vec<Vec<Vec<Jet>>> {
    let n = g_inv.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| crate::jet::sum((0..n).map(|s| &g_inv[i][s] * &t[s][j][k])))
                        .collect()
                })
                .collect()
        })
        .collect()
}
