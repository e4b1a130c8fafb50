//! Finsler structures, the catalog, Randers and conformal changes, and the
//! pointwise metric objects `g`, `C`, `ℓ`, `φ`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{FinslerError, Result};
use crate::field::{chart_variables, ScalarField};
use crate::jet::Jet;
use crate::point::{sample_points_where, ChartPoint, SampleDomain};
use crate::tensor::{self, Tensor3};

/// A function `σ(x)` on the base manifold.
#[derive(Clone)]
pub struct PositionFunction(Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>);

impl PositionFunction {
    pub fn new<F: Fn(&[Jet]) -> Jet + Send + Sync + 'static>(f: F) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |x| x[0].constant_like(c))
    }

    pub fn eval(&self, x: &[Jet]) -> Jet {
        (self.0)(x)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let p = ChartPoint {
            x: x.to_vec(),
            y: vec![1.0; x.len()],
        };
        let (xj, _) = chart_variables(&p, 0);
        self.eval(&xj).value()
    }
}

/// A 1-form `b_i(x) dx^i` on the base manifold.
#[derive(Clone)]
pub struct CovectorField(Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>);

impl CovectorField {
    pub fn new<F: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static>(f: F) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(b: Vec<f64>) -> Self {
        Self::new(move |x| b.iter().map(|&v| x[0].constant_like(v)).collect())
    }

    /// The differential of a position function.
    pub fn exact(h: PositionFunction) -> Self {
        Self::new(move |x| {
            let n = x.len();
            let raised: Vec<Jet> = x.iter().map(raise).collect();
            let hv = h.eval(&raised);
            (0..n).map(|i| hv.derivative(i).truncate(x[0].order())).collect()
        })
    }

    pub fn eval(&self, x: &[Jet]) -> Vec<Jet> {
        (self.0)(x)
    }
}

// Rebuilds a jet over the same variables one order higher, keeping value and
// first partials. Only valid for coordinate jets.
fn raise(x: &Jet) -> Jet {
    use crate::jet::JetSpace;
    let nv = x.nvars();
    let space = JetSpace::new(nv, x.order() + 1);
    let mut out = space.constant(x.value());
    for v in 0..nv {
        if x.order() >= 1 && x.partial(&[v]) != 0.0 {
            out = &out + &(&space.variable(v, 0.0) * x.partial(&[v]));
        }
    }
    out
}

/// Symmetric matrix field `a_ij(x)` defining a Riemannian structure.
#[derive(Clone)]
pub struct MetricField(Arc<dyn Fn(&[Jet]) -> Vec<Vec<Jet>> + Send + Sync>);

impl MetricField {
    pub fn new<F: Fn(&[Jet]) -> Vec<Vec<Jet>> + Send + Sync + 'static>(f: F) -> Self {
        Self(Arc::new(f))
    }

    pub fn eval(&self, x: &[Jet]) -> Vec<Vec<Jet>> {
        (self.0)(x)
    }
}

/// How a structure was built; transforms keep their inputs.
#[derive(Clone)]
pub enum StructureKind {
    Euclidean,
    MinkowskiQuartic,
    Riemannian(MetricField),
    Randers {
        base: Box<FinslerStructure>,
        b: CovectorField,
    },
    Conformal {
        base: Box<FinslerStructure>,
        sigma: PositionFunction,
    },
    Custom,
}

/// A Lagrangian `L(x, y)` on one chart together with its domain.
#[derive(Clone)]
pub struct FinslerStructure {
    name: String,
    dim: usize,
    lagrangian: ScalarField,
    chart: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
    sampling: SampleDomain,
    kind: StructureKind,
}

impl fmt::Debug for FinslerStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FinslerStructure")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl FinslerStructure {
    /// A structure from an arbitrary Lagrangian; `L` must be positive and
    /// positively 1-homogeneous in `y`.
    pub fn custom(name: impl Into<String>, dim: usize, lagrangian: ScalarField) -> Self {
        Self {
            name: name.into(),
            dim,
            lagrangian,
            chart: Arc::new(|_| true),
            sampling: SampleDomain::unit_box(dim),
            kind: StructureKind::Custom,
        }
    }

    pub fn with_chart<D: Fn(&[f64]) -> bool + Send + Sync + 'static>(mut self, chart: D) -> Self {
        self.chart = Arc::new(chart);
        self
    }

    pub fn with_sampling(mut self, sampling: SampleDomain) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &StructureKind {
        &self.kind
    }

    pub fn lagrangian(&self) -> &ScalarField {
        &self.lagrangian
    }

    pub fn sampling(&self) -> &SampleDomain {
        &self.sampling
    }

    pub fn lagrangian_value(&self, p: &ChartPoint) -> f64 {
        self.lagrangian.value(p)
    }

    pub fn in_chart(&self, p: &ChartPoint) -> bool {
        p.dim() == self.dim && (self.chart)(&p.x)
    }

    /// Checks that `p` is a valid evaluation point (chart, dimension, Randers cone).
    pub fn check_point(&self, p: &ChartPoint) -> Result<()> {
        if p.dim() != self.dim {
            return Err(FinslerError::Domain(format!(
                "{}: point has dimension {}, structure has {}",
                self.name,
                p.dim(),
                self.dim
            )));
        }
        if p.y_norm() == 0.0 {
            return Err(FinslerError::Domain("direction y must be nonzero".into()));
        }
        if !(self.chart)(&p.x) {
            return Err(FinslerError::Domain(format!("{p} is outside the chart of {}", self.name)));
        }
        match &self.kind {
            StructureKind::Randers { base, b } => {
                base.check_point(p)?;
                let norm = covector_norm(base, b, p)?;
                if norm >= 1.0 {
                    return Err(FinslerError::SingularMetric {
                        point: p.to_string(),
                        reason: format!("Randers covector has |b|_g = {norm:.6} ≥ 1"),
                    });
                }
                Ok(())
            }
            StructureKind::Conformal { base, .. } => base.check_point(p),
            _ => Ok(()),
        }
    }

    /// Deterministic admissible sample points of this structure.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<ChartPoint>> {
        sample_points_where(&self.sampling, count, seed, |p| {
            self.check_point(p).is_ok() && metric_tensor(self, p).is_ok()
        })
    }

    /// `L` evaluated on coordinate jets.
    pub fn lagrangian_jet(&self, x: &[Jet], y: &[Jet]) -> Jet {
        self.lagrangian.on(x, y)
    }
}

/// `√(g^{ij} b_i b_j)` with the metric of `base` at `p`.
pub fn covector_norm(base: &FinslerStructure, b: &CovectorField, p: &ChartPoint) -> Result<f64> {
    let g = metric_tensor(base, p)?;
    let (x, _) = chart_variables(p, 0);
    let bv = DVector::from_iterator(p.dim(), b.eval(&x).iter().map(Jet::value));
    let ginv = g.try_inverse().ok_or_else(|| FinslerError::SingularMetric {
        point: p.to_string(),
        reason: "metric not invertible".into(),
    })?;
    Ok((bv.transpose() * ginv * &bv)[(0, 0)].max(0.0).sqrt())
}

// ---------------------------------------------------------------------------
// Catalog

pub fn euclidean(n: usize) -> FinslerStructure {
    let l = ScalarField::new(|_, y| jet_norm2(y).sqrt());
    FinslerStructure {
        kind: StructureKind::Euclidean,
        ..FinslerStructure::custom(format!("euclidean{n}"), n, l)
    }
}

/// `L = (Σ (y^i)⁴)^{1/4}`.
pub fn minkowski_quartic(n: usize) -> FinslerStructure {
    let l = ScalarField::new(|_, y| {
        let s = crate::jet::sum(y.iter().map(|v| {
            let sq = v * v;
            &sq * &sq
        }));
        s.powf(0.25)
    });
    FinslerStructure {
        kind: StructureKind::MinkowskiQuartic,
        ..FinslerStructure::custom(format!("quartic{n}"), n, l)
    }
}

/// `L = √(a_ij(x) y^i y^j)`.
pub fn riemannian(name: impl Into<String>, n: usize, a: MetricField) -> FinslerStructure {
    let a2 = a.clone();
    let l = ScalarField::new(move |x, y| {
        let m = a2.eval(x);
        let mut acc = y[0].constant_like(0.0);
        for i in 0..y.len() {
            for j in 0..y.len() {
                acc += &(&m[i][j] * &y[i]) * &y[j];
            }
        }
        acc.sqrt()
    });
    FinslerStructure {
        kind: StructureKind::Riemannian(a),
        ..FinslerStructure::custom(name, n, l)
    }
}

/// Conformal factor `4/(1+|x|²)²` of the unit sphere in stereographic coordinates.
pub fn stereographic_factor(x: &[Jet]) -> Jet {
    let r2 = jet_norm2(x);
    let d = &r2 + 1.0;
    4.0 * (&d * &d).recip()
}

/// Round unit sphere S² via stereographic projection from the north pole,
/// chart restricted to `|x| ≤ 3`.
pub fn round_sphere() -> FinslerStructure {
    let a = MetricField::new(|x| {
        let f = stereographic_factor(x);
        let zero = f.constant_like(0.0);
        (0..2)
            .map(|i| (0..2).map(|j| if i == j { f.clone() } else { zero.clone() }).collect())
            .collect()
    });
    riemannian("sphere2", 2, a).with_chart(|x| x.iter().map(|v| v * v).sum::<f64>() <= 9.0)
}

/// Generalized Randers change `L* = L + b_i(x) y^i`.
pub fn randers_change(base: &FinslerStructure, b: CovectorField) -> FinslerStructure {
    let lb = base.lagrangian.clone();
    let b2 = b.clone();
    let l = ScalarField::new(move |x, y| {
        let bv = b2.eval(x);
        let mut alpha = &bv[0] * &y[0];
        for i in 1..y.len() {
            alpha += &bv[i] * &y[i];
        }
        lb.on(x, y) + alpha
    });
    FinslerStructure {
        name: format!("randers({})", base.name),
        dim: base.dim,
        lagrangian: l,
        chart: Arc::clone(&base.chart),
        sampling: base.sampling.clone(),
        kind: StructureKind::Randers {
            base: Box::new(base.clone()),
            b,
        },
    }
}

/// Randers change that first validates `|b|_g < 1` at the given points.
pub fn randers_change_checked(
    base: &FinslerStructure,
    b: CovectorField,
    points: &[ChartPoint],
) -> Result<FinslerStructure> {
    let out = randers_change(base, b);
    for p in points {
        out.check_point(p)?;
    }
    Ok(out)
}

/// Conformal change `L̃ = e^{σ(x)} L`.
pub fn conformal_change(base: &FinslerStructure, sigma: PositionFunction) -> FinslerStructure {
    let lb = base.lagrangian.clone();
    let s2 = sigma.clone();
    let l = ScalarField::new(move |x, y| s2.eval(x).exp() * lb.on(x, y));
    FinslerStructure {
        name: format!("conformal({})", base.name),
        dim: base.dim,
        lagrangian: l,
        chart: Arc::clone(&base.chart),
        sampling: base.sampling.clone(),
        kind: StructureKind::Conformal {
            base: Box::new(base.clone()),
            sigma,
        },
    }
}

/// Closed covector `b = d(0.1 x¹ + 0.15 x¹x²)` used by the Randers preset.
pub fn preset_randers_covector() -> CovectorField {
    CovectorField::new(|x| {
        vec![&(&x[1] * 0.15) + 0.1, &x[0] * 0.15]
    })
}

/// Randers change of the round sphere by [`preset_randers_covector`].
pub fn randers_sphere() -> FinslerStructure {
    randers_change(&round_sphere(), preset_randers_covector()).renamed("randers_sphere2")
}

/// Conformal change of the planar quartic by `σ = 0.3x¹ − 0.2x¹x²`.
pub fn conformal_quartic() -> FinslerStructure {
    let sigma = PositionFunction::new(|x| &x[0] * 0.3 - &(&x[0] * &x[1]) * 0.2);
    conformal_change(&minkowski_quartic(2), sigma).renamed("conformal_quartic2")
}

/// The five planar catalog structures used by the theorem sweeps.
pub fn catalog() -> Vec<FinslerStructure> {
    vec![
        euclidean(2),
        minkowski_quartic(2),
        round_sphere(),
        randers_sphere(),
        conformal_quartic(),
    ]
}

/// Looks up a catalog or preset structure by name.
pub fn by_name(name: &str) -> Option<FinslerStructure> {
    Some(match name {
        "euclidean2" => euclidean(2),
        "euclidean3" => euclidean(3),
        "quartic2" | "minkowski_quartic2" => minkowski_quartic(2),
        "quartic3" | "minkowski_quartic3" => minkowski_quartic(3),
        "sphere2" => round_sphere(),
        "randers_sphere2" => randers_sphere(),
        "conformal_quartic2" => conformal_quartic(),
        _ => return None,
    })
}

pub const PRESET_NAMES: &[&str] = &[
    "euclidean2",
    "euclidean3",
    "quartic2",
    "quartic3",
    "sphere2",
    "randers_sphere2",
    "conformal_quartic2",
];

pub(crate) fn jet_norm2(v: &[Jet]) -> Jet {
    crate::jet::sum(v.iter().map(|c| c * c))
}

// ---------------------------------------------------------------------------
// Pointwise metric objects

/// `L`, `E = ½L²` and `g_ij = ∂²E/∂y^i∂y^j` as jets, `L` taken at `order`.
pub(crate) struct MetricJets {
    pub l: Jet,
    pub e: Jet,
    pub g: Vec<Vec<Jet>>,
}

pub(crate) fn metric_jets(f: &FinslerStructure, x: &[Jet], y: &[Jet]) -> MetricJets {
    let n = y.len();
    let l = f.lagrangian_jet(x, y);
    let e = (&l * &l).scale(0.5);
    let dy: Vec<Jet> = (0..n).map(|i| e.derivative(n + i)).collect();
    let g = (0..n)
        .map(|i| (0..n).map(|j| dy[i].derivative(n + j)).collect())
        .collect();
    MetricJets { l, e, g }
}

fn checked_jets(f: &FinslerStructure, p: &ChartPoint, order: usize) -> Result<MetricJets> {
    f.check_point(p)?;
    let (x, y) = chart_variables(p, order);
    let mj = metric_jets(f, &x, &y);
    tensor::spd_condition(&tensor::values(&mj.g), p)?;
    let l = mj.l.value();
    if !(l > 0.0) {
        return Err(FinslerError::SingularMetric {
            point: p.to_string(),
            reason: format!("Lagrangian not positive (L = {l})"),
        });
    }
    Ok(mj)
}

/// Fundamental tensor `g_ij = ½ ∂²(L²)/∂y^i∂y^j`.
pub fn metric_tensor(f: &FinslerStructure, p: &ChartPoint) -> Result<DMatrix<f64>> {
    Ok(tensor::values(&checked_jets(f, p, 2)?.g))
}

/// Cartan tensor `C_ijk = ½ ∂g_ij/∂y^k`.
pub fn cartan_tensor(f: &FinslerStructure, p: &ChartPoint) -> Result<Tensor3> {
    let n = p.dim();
    let mj = checked_jets(f, p, 3)?;
    Ok(Tensor3::from_fn(n, |i, j, k| 0.5 * mj.g[i][j].partial(&[n + k])))
}

/// `ℓ_i = ∂L/∂y^i`.
pub fn ell_form(f: &FinslerStructure, p: &ChartPoint) -> Result<DVector<f64>> {
    let n = p.dim();
    let mj = checked_jets(f, p, 2)?;
    Ok(DVector::from_fn(n, |i, _| mj.l.partial(&[n + i])))
}

/// `ℓ_i = L⁻¹ g_ij y^j`, the second defining formula of `ℓ`.
pub fn ell_form_from_metric(f: &FinslerStructure, p: &ChartPoint) -> Result<DVector<f64>> {
    let g = metric_tensor(f, p)?;
    let y = DVector::from_column_slice(&p.y);
    Ok(g * y / f.lagrangian_value(p))
}

/// `φ^i_j = δ^i_j − L⁻¹ y^i ℓ_j`.
pub fn phi_map(f: &FinslerStructure, p: &ChartPoint) -> Result<DMatrix<f64>> {
    let ell = ell_form(f, p)?;
    let l = f.lagrangian_value(p);
    let n = p.dim();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d - p.y[i] * ell[j] / l
    }))
}

/// Randers metric by the transform formula `g* = τ(g − ℓ⊗ℓ) + ℓ*⊗ℓ*`,
/// `τ = L*/L`, `ℓ* = ℓ + b`.
pub fn randers_metric_formula(
    base: &FinslerStructure,
    b: &CovectorField,
    p: &ChartPoint,
) -> Result<DMatrix<f64>> {
    let g = metric_tensor(base, p)?;
    let ell = ell_form(base, p)?;
    let (x, _) = chart_variables(p, 0);
    let bv = DVector::from_iterator(p.dim(), b.eval(&x).iter().map(Jet::value));
    let l = base.lagrangian_value(p);
    let alpha = bv.dot(&DVector::from_column_slice(&p.y));
    let tau = (l + alpha) / l;
    let ell_star = &ell + &bv;
    Ok((g - &ell * ell.transpose()) * tau + &ell_star * ell_star.transpose())
}
