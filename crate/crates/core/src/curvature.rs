//! (v)h-torsion, Cartan h-curvature, horizontal Ricci and scalar curvature,
//! and the scalar-curvature factorization `R̂ = ω ∧ φ`.
//!
//! Layout: `R̂^i_jk` is stored `[i][j][k]` and is the vertical component of
//! `[δ_j, δ_k]`, i.e. `R̂^i_jk = δ_k N^i_j − δ_j N^i_k`. The h-curvature
//! `(R(δ̄_j, δ̄_k) δ̄_h)^i = R^i_hjk` is stored `[i][h][j][k]` and uses the
//! sign convention `K(X,Y)Z = −∇_X∇_Y Z + ∇_Y∇_X Z + ∇_{[X,Y]} Z`, so that
//! `R^i_hjk y^h = R̂^i_jk` and the unit sphere has `Sc^h = +2`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::Result;
use crate::field::ScalarField;
use crate::geometry::LocalGeometry;
use crate::metric::FinslerStructure;
use crate::point::ChartPoint;
use crate::tensor::{Tensor3, Tensor4};

#[derive(Debug, Clone, PartialEq)]
pub struct VHTorsion(pub Tensor3);

#[derive(Debug, Clone, PartialEq)]
pub struct HCurvature(pub Tensor4);

pub fn vh_torsion_at(geo: &LocalGeometry) -> Tensor3 {
    let n = geo.dim();
    let nj = geo.barthel_jets();
    let d: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| geo.delta(k, &nj[i][j]).value()).collect())
                .collect()
        })
        .collect();
    // d[i][j][k] = δ_k N^i_j
    Tensor3::from_fn(n, |i, j, k| d[i][j][k] - d[i][k][j])
}

pub fn h_curvature_at(geo: &LocalGeometry, rhat: &Tensor3) -> Tensor4 {
    let n = geo.dim();
    let fj = geo.coefficient_jets();
    let fv = geo.coefficients_value();
    let cv = geo.cartan_mixed_value();
    // dfc[i][h][k][j] = δ_j F^i_hk
    let dfc: Vec<Vec<Vec<Vec<f64>>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|h| {
                    (0..n)
                        .map(|k| (0..n).map(|j| geo.delta(j, &fj[i][h][k]).value()).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    Tensor4::from_fn(n, |i, h, j, k| {
        let mut r = dfc[i][h][j][k] - dfc[i][h][k][j];
        for m in 0..n {
            r += fv.get(m, h, j) * fv.get(i, m, k) - fv.get(m, h, k) * fv.get(i, m, j);
        }
        for l in 0..n {
            r += cv.get(i, h, l) * rhat.get(l, j, k);
        }
        r
    })
}

/// `Ric^h_{jh} = Σ_k R^k_hjk`, row `j`, column `h`.
pub fn ricci_of(r: &Tensor4) -> DMatrix<f64> {
    let n = r.dim();
    DMatrix::from_fn(n, n, |j, h| (0..n).map(|k| r.get(k, h, j, k)).sum())
}

/// `Sc^h = g^{jh} Ric^h_{jh}`.
pub fn scalar_of(g_inv: &DMatrix<f64>, ric: &DMatrix<f64>) -> f64 {
    g_inv.component_mul(&ric.transpose()).sum()
}

pub fn vh_torsion(f: &FinslerStructure, p: &ChartPoint) -> Result<VHTorsion> {
    Ok(VHTorsion(vh_torsion_at(&LocalGeometry::new(f, p)?)))
}

pub fn h_curvature(f: &FinslerStructure, p: &ChartPoint) -> Result<HCurvature> {
    let geo = LocalGeometry::new(f, p)?;
    let rhat = vh_torsion_at(&geo);
    Ok(HCurvature(h_curvature_at(&geo, &rhat)))
}

pub fn ricci_h(f: &FinslerStructure, p: &ChartPoint) -> Result<DMatrix<f64>> {
    Ok(ricci_of(&h_curvature(f, p)?.0))
}

pub fn scalar_h(f: &FinslerStructure, p: &ChartPoint) -> Result<f64> {
    let geo = LocalGeometry::new(f, p)?;
    let rhat = vh_torsion_at(&geo);
    let ric = ricci_of(&h_curvature_at(&geo, &rhat));
    Ok(scalar_of(&geo.metric_inverse_value(), &ric))
}

/// Components of the Barthel curvature on horizontal pairs, `ℜ = −γ R̂(ρ·, ρ·)`.
pub fn barthel_curvature_at(geo: &LocalGeometry) -> Tensor3 {
    let r = vh_torsion_at(geo);
    let n = geo.dim();
    Tensor3::from_fn(n, |i, j, k| -r.get(i, j, k))
}

/// Max-norm of `R^i_hjk y^h − R̂^i_jk`.
pub fn contraction_residual(geo: &LocalGeometry, r: &Tensor4, rhat: &Tensor3) -> f64 {
    let n = geo.dim();
    let y = &geo.point().y;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c: f64 = (0..n).map(|h| r.get(i, h, j, k) * y[h]).sum();
                worst = worst.max((c - rhat.get(i, j, k)).abs());
            }
        }
    }
    worst
}

/// Outcome of testing `R̂ = ω ∧ φ` at one point.
#[derive(Debug, Clone, Serialize)]
pub struct ScalarCurvatureData {
    pub kappa: f64,
    /// `∂κ/∂y^i` used to build `ω`.
    pub kappa_dy: Vec<f64>,
    /// `ω_i = ⅓L(L ∂κ/∂y^i + 3κℓ_i)`
    pub omega: Vec<f64>,
    /// `ω(η̄) = ω_i y^i`
    pub omega_eta: f64,
    /// `⅓L²(𝒞·κ + 3κ)`
    pub omega_eta_expected: f64,
    /// max-norm of `R̂^i_jk − (ω_j φ^i_k − ω_k φ^i_j)`
    pub residual: f64,
}

fn phi_at(geo: &LocalGeometry) -> DMatrix<f64> {
    let n = geo.dim();
    let l = geo.lagrangian().value();
    let ell = geo.ell_value();
    let y = &geo.point().y;
    DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d - y[i] * ell[j] / l
    })
}

fn scalar_form_data(geo: &LocalGeometry, rhat: &Tensor3, kappa: f64, kappa_dy: &[f64]) -> ScalarCurvatureData {
    let n = geo.dim();
    let l = geo.lagrangian().value();
    let ell = geo.ell_value();
    let y = &geo.point().y;
    let phi = phi_at(geo);
    let omega: Vec<f64> = (0..n)
        .map(|i| l * (l * kappa_dy[i] + 3.0 * kappa * ell[i]) / 3.0)
        .collect();
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let wedge = omega[j] * phi[(i, k)] - omega[k] * phi[(i, j)];
                residual = residual.max((rhat.get(i, j, k) - wedge).abs());
            }
        }
    }
    let euler_kappa: f64 = (0..n).map(|i| y[i] * kappa_dy[i]).sum();
    ScalarCurvatureData {
        kappa,
        kappa_dy: kappa_dy.to_vec(),
        omega_eta: omega.iter().zip(y).map(|(a, b)| a * b).sum(),
        omega_eta_expected: l * l * (euler_kappa + 3.0 * kappa) / 3.0,
        omega,
        residual,
    }
}

/// Tests `R̂ = ω ∧ φ` with a caller-supplied `κ(x, y)`.
pub fn scalar_form_check(f: &FinslerStructure, p: &ChartPoint, kappa: &ScalarField) -> Result<ScalarCurvatureData> {
    let geo = LocalGeometry::new(f, p)?;
    let rhat = vh_torsion_at(&geo);
    Ok(scalar_form_check_at(&geo, &rhat, kappa))
}

pub fn scalar_form_check_at(geo: &LocalGeometry, rhat: &Tensor3, kappa: &ScalarField) -> ScalarCurvatureData {
    let (x, y) = geo.vars(1);
    let k = kappa.on(&x, &y);
    let n = geo.dim();
    let dk: Vec<f64> = (0..n).map(|i| k.partial(&[n + i])).collect();
    scalar_form_data(geo, rhat, k.value(), &dk)
}

/// Least-squares estimate of `κ` (and, unless `constant`, of `∂κ/∂y`) from
/// `R̂ = ω ∧ φ` at one point.
///
/// `κ` is 0-homogeneous in `y`, so `y^i ∂κ/∂y^i = 0` is imposed as an extra
/// equation; without it a multiple of `ℓ` in `∂κ/∂y` cannot be told apart
/// from a shift of `κ`.
pub fn fit_scalar_curvature(f: &FinslerStructure, p: &ChartPoint, constant: bool) -> Result<ScalarCurvatureData> {
    let geo = LocalGeometry::new(f, p)?;
    let rhat = vh_torsion_at(&geo);
    Ok(fit_scalar_curvature_at(&geo, &rhat, constant))
}

pub fn fit_scalar_curvature_at(geo: &LocalGeometry, rhat: &Tensor3, constant: bool) -> ScalarCurvatureData {
    let n = geo.dim();
    let l = geo.lagrangian().value();
    let ell = geo.ell_value();
    let phi = phi_at(geo);
    let y = &geo.point().y;
    let unknowns = if constant { 1 } else { 1 + n };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in (j + 1)..n {
                // R̂^i_jk = κ L (ℓ_j φ^i_k − ℓ_k φ^i_j) + ⅓L² (dκ_j φ^i_k − dκ_k φ^i_j)
                let mut row = vec![0.0; unknowns];
                row[0] = l * (ell[j] * phi[(i, k)] - ell[k] * phi[(i, j)]);
                if !constant {
                    row[1 + j] += l * l / 3.0 * phi[(i, k)];
                    row[1 + k] -= l * l / 3.0 * phi[(i, j)];
                }
                rows.push(row);
                rhs.push(rhat.get(i, j, k));
            }
        }
    }
    if !constant {
        let mut row = vec![0.0; unknowns];
        for i in 0..n {
            row[1 + i] = y[i] * l;
        }
        rows.push(row);
        rhs.push(0.0);
    }
    let a = DMatrix::from_fn(rows.len(), unknowns, |r, c| rows[r][c]);
    let b = DVector::from_vec(rhs);
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(unknowns));
    let kappa = sol[0];
    let dk: Vec<f64> = if constant {
        vec![0.0; n]
    } else {
        (0..n).map(|i| sol[1 + i]).collect()
    };
    scalar_form_data(geo, rhat, kappa, &dk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{euclidean, minkowski_quartic, round_sphere};

    #[test]
    fn flat_structures_have_no_curvature() {
        for s in [euclidean(2), minkowski_quartic(2), euclidean(3), minkowski_quartic(3)] {
            for p in s.sample(5, 2).unwrap() {
                assert!(vh_torsion(&s, &p).unwrap().0.max_abs() < 1e-9, "{}", s.name());
                assert!(h_curvature(&s, &p).unwrap().0.max_abs() < 1e-8);
                assert!(ricci_h(&s, &p).unwrap().amax() < 1e-8);
                assert!(scalar_h(&s, &p).unwrap().abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sphere_curvature_is_one() {
        let s = round_sphere();
        for p in s.sample(10, 12).unwrap() {
            assert!((scalar_h(&s, &p).unwrap() - 2.0).abs() < 1e-6);
            let fit = fit_scalar_curvature(&s, &p, true).unwrap();
            assert!((fit.kappa - 1.0).abs() < 1e-8, "{}", fit.kappa);
            assert!(fit.residual < 1e-8);
        }
    }

    #[test]
    fn vh_torsion_is_antisymmetric_and_one_homogeneous() {
        let s = round_sphere();
        for p in s.sample(6, 1).unwrap() {
            let r = vh_torsion(&s, &p).unwrap().0;
            let r2 = vh_torsion(&s, &p.scaled(2.0)).unwrap().0;
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        assert!((r.get(i, j, k) + r.get(i, k, j)).abs() < 1e-12);
                        assert!((r2.get(i, j, k) - 2.0 * r.get(i, j, k)).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_kappa_is_rejected_on_the_sphere() {
        let s = round_sphere();
        let zero = ScalarField::constant(0.0);
        let one = ScalarField::constant(1.0);
        let e = euclidean(2);
        for p in s.sample(5, 3).unwrap() {
            let bad = scalar_form_check(&s, &p, &zero).unwrap();
            let good = scalar_form_check(&s, &p, &one).unwrap();
            let flat = scalar_form_check(&e, &p, &zero).unwrap();
            assert!(good.residual < 1e-8);
            assert!(flat.residual == 0.0);
            // |y| ≥ 0.5 and g ≥ 4/9 on the unit box
            assert!(bad.residual > 0.1, "{}", bad.residual);
            assert!((good.omega_eta - good.omega_eta_expected).abs() < 1e-10);
        }
    }
}
