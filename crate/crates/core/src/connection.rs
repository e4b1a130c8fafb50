//! Canonical spray, Barthel connection and Cartan connection coefficients,
//! with the residual certificates that fix every chart convention.
//!
//! Chart conventions: the spray is `G = y^i ∂_i − 2G^i ∂̇_i`, the Barthel
//! coefficients are `N^i_j = ∂̇_j G^i`, and horizontal lifts are
//! `δ_i = ∂_i − N^m_i ∂̇_m`. None of these formulas is trusted on its own:
//! each is checked against a defining identity (`i_G Ω = −dE`, `d_h E = 0`,
//! `∇g = 0`, `K∘β = 0`).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::Result;
use crate::field::ScalarField;
use crate::geometry::LocalGeometry;
use crate::metric::FinslerStructure;
use crate::pi::PiVectorField;
use crate::point::ChartPoint;
use crate::tensor::Tensor3;

/// Spray coefficients `G^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SprayValue(pub DVector<f64>);

/// Barthel coefficients `N^i_j` (row `i`, column `j`).
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearConnection(pub DMatrix<f64>);

/// Cartan connection coefficients `F^i_jk` and `C^i_jk`, both `[i][j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanCoefficients {
    pub horizontal: Tensor3,
    pub vertical: Tensor3,
}

pub fn spray(f: &FinslerStructure, p: &ChartPoint) -> Result<SprayValue> {
    Ok(SprayValue(LocalGeometry::new(f, p)?.spray_value()))
}

/// Max-norm of `i_G Ω + dE` over the `2n` coordinate directions, for the
/// spray coefficients computed by the crate.
pub fn spray_defect(f: &FinslerStructure, p: &ChartPoint) -> Result<f64> {
    let geo = LocalGeometry::new(f, p)?;
    Ok(spray_defect_for(&geo, geo.spray_value().as_slice()))
}

/// Max-norm of `i_G Ω + dE` for caller-supplied spray coefficients `G^i`.
///
/// `Ω = dd_J E = ∂_j∂̇_i E dx^j∧dx^i + ∂̇_j∂̇_i E dy^j∧dx^i` is assembled
/// directly from the jets of `E`; no homogeneity identity is used.
pub fn spray_defect_for(geo: &LocalGeometry, spray: &[f64]) -> f64 {
    let n = geo.dim();
    let e = geo.energy();
    let y = &geo.point().y;
    // vertical part of G
    let gv: Vec<f64> = spray.iter().map(|s| -2.0 * s).collect();
    let a = |j: usize, i: usize| e.partial(&[j, n + i]);
    let gm = |j: usize, i: usize| e.partial(&[n + j, n + i]);
    let mut worst: f64 = 0.0;
    for m in 0..n {
        let mut dx = 0.0;
        for j in 0..n {
            dx += a(j, m) * y[j] - a(m, j) * y[j] + gm(j, m) * gv[j];
        }
        dx += e.partial(&[m]);
        let mut dy = 0.0;
        for i in 0..n {
            dy -= gm(m, i) * y[i];
        }
        dy += e.partial(&[n + m]);
        worst = worst.max(dx.abs()).max(dy.abs());
    }
    worst
}

pub fn barthel(f: &FinslerStructure, p: &ChartPoint) -> Result<NonlinearConnection> {
    Ok(NonlinearConnection(LocalGeometry::new(f, p)?.barthel_value()))
}

/// `δ_i f` at `p`.
pub fn horizontal_derivative(
    f: &FinslerStructure,
    field: &ScalarField,
    p: &ChartPoint,
    i: usize,
) -> Result<f64> {
    let geo = LocalGeometry::new(f, p)?;
    let (x, y) = geo.vars(1);
    Ok(geo.delta(i, &field.on(&x, &y)).value())
}

pub fn cartan_coeffs(f: &FinslerStructure, p: &ChartPoint) -> Result<CartanCoefficients> {
    let geo = LocalGeometry::new(f, p)?;
    Ok(CartanCoefficients {
        horizontal: geo.coefficients_value(),
        vertical: geo.cartan_mixed_value(),
    })
}

/// Components of `∇_{βδ̄_j} X̄`: `δ_j X^i + F^i_kj X^k`.
pub fn nabla_h(
    f: &FinslerStructure,
    field: &PiVectorField,
    p: &ChartPoint,
    j: usize,
) -> Result<DVector<f64>> {
    let geo = LocalGeometry::new(f, p)?;
    nabla_h_at(&geo, field, j)
}

pub fn nabla_h_at(geo: &LocalGeometry, field: &PiVectorField, j: usize) -> Result<DVector<f64>> {
    let n = geo.dim();
    let xs = field.eval(geo)?;
    let fc = geo.coefficients_value();
    Ok(DVector::from_fn(n, |i, _| {
        let mut v = geo.delta(j, &xs[i]).value();
        for k in 0..n {
            v += fc.get(i, k, j) * xs[k].value();
        }
        v
    }))
}

/// Horizontal and vertical projectors on chart components `(X^i, Ẋ^i)` of a
/// tangent vector to the slit bundle: `h = β∘ρ`, `v = γ∘K`.
pub fn projectors(geo: &LocalGeometry) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = geo.dim();
    let nn = geo.barthel_value();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    let mut v = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        h[(i, i)] = 1.0;
        v[(n + i, n + i)] = 1.0;
        for j in 0..n {
            h[(n + i, j)] = -nn[(i, j)];
            v[(n + i, j)] = nn[(i, j)];
        }
    }
    (h, v)
}

/// Every structural certificate at one point.
#[derive(Debug, Clone, Serialize)]
pub struct StructuralResiduals {
    /// `|i_G Ω + dE|`
    pub spray_defect: f64,
    /// `|δ_i E|`
    pub conservativity: f64,
    /// `|∂̇_k N^i_j − ∂̇_j N^i_k|`
    pub barthel_torsion: f64,
    /// `|δ_k g_ij − F^l_ik g_lj − F^l_jk g_il|`
    pub h_metricity: f64,
    /// `|∂̇_k g_ij − C^l_ik g_lj − C^l_jk g_il|`
    pub v_metricity: f64,
    /// asymmetry of `∂̇_k N^i_j − y^m ∂̇_k F^i_jm` in `(j, k)`
    pub f_symmetry: f64,
    /// `|C_ijk y^k|`
    pub cartan_eta: f64,
    /// `|N^i_j − F^i_kj y^k|`
    pub deflection: f64,
    /// `|h + v − I|`, `|h² − h|`, `|v² − v|`, `|hv|`, `|vh|`
    pub projectors: f64,
}

impl StructuralResiduals {
    pub fn max(&self) -> f64 {
        [
            self.spray_defect,
            self.conservativity,
            self.barthel_torsion,
            self.h_metricity,
            self.v_metricity,
            self.f_symmetry,
            self.cartan_eta,
            self.deflection,
            self.projectors,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn structural_residuals(geo: &LocalGeometry) -> StructuralResiduals {
    let n = geo.dim();
    let y = &geo.point().y;
    let e = geo.energy();
    let nj = geo.barthel_jets();
    let g = geo.metric();
    let fj = geo.coefficient_jets();
    let cl = geo.cartan_lower_jets();
    let fv = geo.coefficients_value();
    let gv = geo.metric_value();
    let cv = geo.cartan_mixed_value();

    let conservativity = (0..n)
        .map(|i| geo.delta(i, e).value().abs())
        .fold(0.0, f64::max);

    let mut barthel_torsion: f64 = 0.0;
    let mut h_metricity: f64 = 0.0;
    let mut v_metricity: f64 = 0.0;
    let mut f_symmetry: f64 = 0.0;
    let mut cartan_eta: f64 = 0.0;
    let mut deflection: f64 = 0.0;

    // U^i_jk = ∂̇_k N^i_j − y^m ∂̇_k F^i_jm
    let unsym = |i: usize, j: usize, k: usize| {
        let mut u = nj[i][j].partial(&[n + k]);
        for m in 0..n {
            u -= y[m] * fj[i][j][m].partial(&[n + k]);
        }
        u
    };

    for i in 0..n {
        for j in 0..n {
            let mut fy = 0.0;
            let mut cy = 0.0;
            for k in 0..n {
                fy += fv.get(i, k, j) * y[k];
                cy += cl[i][j][k].value() * y[k];
                barthel_torsion = barthel_torsion
                    .max((nj[i][j].partial(&[n + k]) - nj[i][k].partial(&[n + j])).abs());
                f_symmetry = f_symmetry.max((unsym(i, j, k) - unsym(i, k, j)).abs());

                let dg = geo.delta(k, &g[i][j]).value();
                let mut hm = dg;
                let mut vm = g[i][j].partial(&[n + k]);
                for l in 0..n {
                    hm -= fv.get(l, i, k) * gv[(l, j)] + fv.get(l, j, k) * gv[(i, l)];
                    vm -= cv.get(l, i, k) * gv[(l, j)] + cv.get(l, j, k) * gv[(i, l)];
                }
                h_metricity = h_metricity.max(hm.abs());
                v_metricity = v_metricity.max(vm.abs());
            }
            cartan_eta = cartan_eta.max(cy.abs());
            deflection = deflection.max((nj[i][j].value() - fy).abs());
        }
    }

    let (h, v) = projectors(geo);
    let id = DMatrix::<f64>::identity(2 * n, 2 * n);
    let projectors = [
        (&h + &v - &id).abs().max(),
        (&h * &h - &h).abs().max(),
        (&v * &v - &v).abs().max(),
        (&h * &v).abs().max(),
        (&v * &h).abs().max(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    StructuralResiduals {
        spray_defect: spray_defect_for(geo, geo.spray_value().as_slice()),
        conservativity,
        barthel_torsion,
        h_metricity,
        v_metricity,
        f_symmetry,
        cartan_eta,
        deflection,
        projectors,
    }
}
