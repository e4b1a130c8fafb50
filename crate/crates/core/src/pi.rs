//! π-vector fields, π-forms, the musical maps, the π-exterior derivative
//! `d̄` and the operator `A_X̄ = ∇_{β·}X̄`.
//!
//! Components are taken on the horizontal coordinate frame `βδ̄_i = δ_i`.
//! Brackets of coordinate horizontal lifts are vertical, so `d̄` of a form is
//! the alternating sum of `δ`-derivatives of its components.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::curvature::vh_torsion_at;
use crate::error::{FinslerError, Result};
use crate::field::ScalarField;
use crate::geometry::LocalGeometry;
use crate::jet::Jet;
use crate::metric::{
    conformal_change, metric_jets, randers_change, CovectorField, FinslerStructure, PositionFunction,
};
use crate::point::ChartPoint;
use crate::tensor;

/// Largest form degree accepted by [`dbar_p`].
pub const MAX_FORM_DEGREE: usize = 3;

type FieldEval = dyn Fn(&LocalGeometry) -> Result<Vec<Jet>> + Send + Sync;

/// A section of the pullback bundle, `X̄ = X^i(x, y) ∂̄_i`.
///
/// The evaluator receives the full local geometry, so fields built from the
/// metric (gradients, Randers fields) are first-class. Components must carry
/// at least first-order jets.
#[derive(Clone)]
pub struct PiVectorField {
    name: String,
    eval: Arc<FieldEval>,
}

impl fmt::Debug for PiVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PiVectorField({})", self.name)
    }
}

impl PiVectorField {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&LocalGeometry) -> Result<Vec<Jet>> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(f),
        }
    }

    /// A field with explicitly given components `X^i(x, y)`.
    pub fn from_components(name: impl Into<String>, comps: Vec<ScalarField>) -> Self {
        Self::new(name, move |geo| {
            check_len(comps.len(), geo)?;
            let (x, y) = geo.vars(2);
            Ok(comps.iter().map(|c| c.on(&x, &y)).collect())
        })
    }

    /// The π-lift of a vector field on the base (`y`-independent components).
    pub fn lift(name: impl Into<String>, comps: Vec<PositionFunction>) -> Self {
        Self::new(name, move |geo| {
            check_len(comps.len(), geo)?;
            let (x, _) = geo.vars(2);
            Ok(comps.iter().map(|c| c.eval(&x)).collect())
        })
    }

    /// The fundamental field `η̄`, components `y^i`.
    pub fn eta() -> Self {
        Self::new("eta", |geo| Ok(geo.vars(2).1))
    }

    pub fn constant(v: Vec<f64>) -> Self {
        Self::new("constant", move |geo| {
            check_len(v.len(), geo)?;
            let proto = &geo.x()[0];
            Ok(v.iter().map(|c| proto.constant_like(*c)).collect())
        })
    }

    /// `grad f`, defined by `i_X̄ g = d̄f`: components `g^{ij} δ_j f`.
    pub fn gradient(f: ScalarField) -> Self {
        Self::new("gradient", move |geo| {
            let (x, y) = geo.vars(2);
            let fj = f.on(&x, &y);
            let df: Vec<Jet> = (0..geo.dim()).map(|j| geo.delta(j, &fj)).collect();
            Ok(geo.raise(&df))
        })
    }

    /// `g^{ij} ∂_j h` for a function `h(x)` of position, with `g` taken from
    /// `structure` wherever the field is evaluated. In `structure` itself
    /// this is `grad h`, which is always d̄-closed.
    pub fn exact_dual(structure: &FinslerStructure, h: PositionFunction) -> Self {
        let s = structure.clone();
        Self::new("exact_dual", move |geo| {
            let (g_inv, _, x, _) = base_metric_inverse(&s, geo)?;
            let hx = h.eval(&x);
            let dh: Vec<Jet> = (0..geo.dim()).map(|j| hx.derivative(j)).collect();
            Ok((0..geo.dim())
                .map(|i| crate::jet::sum((0..geo.dim()).map(|j| &g_inv[i][j] * &dh[j])))
                .collect())
        })
    }

    /// Pointwise product `s X̄`.
    pub fn scaled(&self, s: ScalarField) -> Self {
        let inner = self.clone();
        Self::new(format!("scaled({})", self.name), move |geo| {
            let (x, y) = geo.vars(2);
            let k = s.on(&x, &y);
            Ok(inner.eval(geo)?.iter().map(|c| &k * c).collect())
        })
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, geo: &LocalGeometry) -> Result<Vec<Jet>> {
        let v = (self.eval)(geo)?;
        check_len(v.len(), geo)?;
        Ok(v)
    }

    pub fn values(&self, geo: &LocalGeometry) -> Result<DVector<f64>> {
        Ok(DVector::from_iterator(geo.dim(), self.eval(geo)?.iter().map(Jet::value)))
    }
}

fn check_len(len: usize, geo: &LocalGeometry) -> Result<()> {
    if len != geo.dim() {
        return Err(FinslerError::InvalidInput(format!(
            "field has {len} components, structure has dimension {}",
            geo.dim()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Forms

#[derive(Clone)]
enum Storage {
    /// strictly increasing index tuples; antisymmetric by construction
    Canonical(HashMap<Vec<usize>, ScalarField>),
    /// full row-major array; antisymmetry is checked when evaluated
    Full(Vec<ScalarField>),
}

/// A π-form of degree `p` with components on the horizontal coordinate frame.
#[derive(Clone)]
pub struct PiForm {
    degree: usize,
    dim: usize,
    storage: Storage,
}

impl fmt::Debug for PiForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PiForm(degree {}, dim {})", self.degree, self.dim)
    }
}

/// Component values of a π-form at one point, full row-major `n^p` array.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormValue {
    pub degree: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl FormValue {
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[flat_index(idx, self.dim)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The 2-form as a matrix.
    pub fn as_matrix(&self) -> Option<DMatrix<f64>> {
        (self.degree == 2).then(|| DMatrix::from_row_slice(self.dim, self.dim, &self.data))
    }
}

fn flat_index(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

fn all_indices(degree: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..degree {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..n).map(move |i| {
                    let mut w = v.clone();
                    w.push(i);
                    w
                })
            })
            .collect();
    }
    out
}

/// Sorts `idx`, returning the permutation sign, or `None` on a repeated index.
fn sort_sign(idx: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = idx.to_vec();
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            } else if v[j] == v[j + 1] {
                return None;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

impl PiForm {
    /// A scalar function as a 0-form.
    pub fn scalar(dim: usize, f: ScalarField) -> Self {
        let mut m = HashMap::new();
        m.insert(Vec::new(), f);
        Self {
            degree: 0,
            dim,
            storage: Storage::Canonical(m),
        }
    }

    /// A 1-form `ω_i ∂̄^i`.
    pub fn one_form(comps: Vec<ScalarField>) -> Self {
        let dim = comps.len();
        Self {
            degree: 1,
            dim,
            storage: Storage::Canonical(comps.into_iter().enumerate().map(|(i, c)| (vec![i], c)).collect()),
        }
    }

    /// A form given by its components on strictly increasing index tuples;
    /// all other components follow by antisymmetry.
    pub fn from_increasing(degree: usize, dim: usize, comps: Vec<(Vec<usize>, ScalarField)>) -> Result<Self> {
        let mut m = HashMap::new();
        for (idx, c) in comps {
            if idx.len() != degree || idx.iter().any(|&i| i >= dim) || idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(FinslerError::InvalidInput(format!(
                    "index tuple {idx:?} is not strictly increasing in 0..{dim} with length {degree}"
                )));
            }
            m.insert(idx, c);
        }
        Ok(Self {
            degree,
            dim,
            storage: Storage::Canonical(m),
        })
    }

    /// A form given by its full `n^p` component array; antisymmetry is
    /// verified at every evaluation.
    pub fn from_array(degree: usize, dim: usize, comps: Vec<ScalarField>) -> Result<Self> {
        if comps.len() != dim.pow(degree as u32) {
            return Err(FinslerError::InvalidInput(format!(
                "expected {} components, got {}",
                dim.pow(degree as u32),
                comps.len()
            )));
        }
        Ok(Self {
            degree,
            dim,
            storage: Storage::Full(comps),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Component jets (full array) at the geometry's point.
    fn jets(&self, geo: &LocalGeometry) -> Result<Vec<Jet>> {
        if self.dim != geo.dim() {
            return Err(FinslerError::InvalidInput(format!(
                "form on dimension {}, structure has dimension {}",
                self.dim,
                geo.dim()
            )));
        }
        let (x, y) = geo.vars(2);
        let zero = x[0].constant_like(0.0);
        let idx = all_indices(self.degree, self.dim);
        match &self.storage {
            Storage::Canonical(m) => Ok(idx
                .iter()
                .map(|i| match sort_sign(i) {
                    Some((s, sign)) => m.get(&s).map_or(zero.clone(), |c| c.on(&x, &y).scale(sign)),
                    None => zero.clone(),
                })
                .collect()),
            Storage::Full(c) => {
                let jets: Vec<Jet> = c.iter().map(|f| f.on(&x, &y)).collect();
                let scale = jets.iter().fold(1.0f64, |m, j| m.max(j.value().abs()));
                for (k, i) in idx.iter().enumerate() {
                    let expected = match sort_sign(i) {
                        Some((s, sign)) => sign * jets[flat_index(&s, self.dim)].value(),
                        None => 0.0,
                    };
                    if (jets[k].value() - expected).abs() > 1e-12 * scale {
                        return Err(FinslerError::InvalidInput(format!(
                            "form components are not antisymmetric at index {i:?}"
                        )));
                    }
                }
                Ok(jets)
            }
        }
    }

    pub fn values(&self, geo: &LocalGeometry) -> Result<FormValue> {
        Ok(FormValue {
            degree: self.degree,
            dim: self.dim,
            data: self.jets(geo)?.iter().map(Jet::value).collect(),
        })
    }
}

/// Alternating `δ`-sum `Σ_a (−1)^a δ_{i_a} ω_{i_0..î_a..i_p}` over a full
/// component array of jets.
fn alternating_delta(geo: &LocalGeometry, degree: usize, comps: &[Jet]) -> FormValue {
    let n = geo.dim();
    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut data = Vec::with_capacity(n.pow(degree as u32 + 1));
    for idx in all_indices(degree + 1, n) {
        let mut v = 0.0;
        for a in 0..=degree {
            let rest: Vec<usize> = idx.iter().enumerate().filter(|(b, _)| *b != a).map(|(_, &i)| i).collect();
            let k = flat_index(&rest, n);
            let d = *cache
                .entry((idx[a], k))
                .or_insert_with(|| geo.delta(idx[a], &comps[k]).value());
            v += if a % 2 == 0 { d } else { -d };
        }
        data.push(v);
    }
    FormValue {
        degree: degree + 1,
        dim: n,
        data,
    }
}

// ---------------------------------------------------------------------------
// Musical maps and d̄

/// `i_X̄ g`: lowered components.
pub fn flat(f: &FinslerStructure, x: &PiVectorField, p: &ChartPoint) -> Result<DVector<f64>> {
    let geo = LocalGeometry::new(f, p)?;
    Ok(geo.metric_value() * x.values(&geo)?)
}

/// The field dual to a 1-form under `g`.
pub fn sharp(f: &FinslerStructure, w: &DVector<f64>, p: &ChartPoint) -> Result<DVector<f64>> {
    let geo = LocalGeometry::new(f, p)?;
    if w.len() != geo.dim() {
        return Err(FinslerError::InvalidInput("covector has the wrong length".into()));
    }
    Ok(geo.metric_inverse_value() * w)
}

/// `(d̄f)_i = δ_i f`.
pub fn dbar_0(f: &FinslerStructure, s: &ScalarField, p: &ChartPoint) -> Result<DVector<f64>> {
    let geo = LocalGeometry::new(f, p)?;
    Ok(dbar_0_at(&geo, s))
}

pub fn dbar_0_at(geo: &LocalGeometry, s: &ScalarField) -> DVector<f64> {
    let (x, y) = geo.vars(2);
    let j = s.on(&x, &y);
    DVector::from_fn(geo.dim(), |i, _| geo.delta(i, &j).value())
}

/// `(d̄ω)_ij = δ_i ω_j − δ_j ω_i`.
pub fn dbar_1(f: &FinslerStructure, w: &PiForm, p: &ChartPoint) -> Result<DMatrix<f64>> {
    if w.degree() != 1 {
        return Err(FinslerError::InvalidInput(format!("expected a 1-form, got degree {}", w.degree())));
    }
    let geo = LocalGeometry::new(f, p)?;
    let comps = w.jets(&geo)?;
    Ok(one_form_dbar(&geo, &comps))
}

fn one_form_dbar(geo: &LocalGeometry, w: &[Jet]) -> DMatrix<f64> {
    let n = geo.dim();
    let d: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| geo.delta(i, &w[j]).value()).collect())
        .collect();
    DMatrix::from_fn(n, n, |i, j| d[i][j] - d[j][i])
}

/// `d̄` on a π-form of degree `p ≤ 3`.
pub fn dbar_p(f: &FinslerStructure, w: &PiForm, p: &ChartPoint) -> Result<FormValue> {
    if w.degree() > MAX_FORM_DEGREE {
        return Err(FinslerError::Capability(format!(
            "d̄ supports forms of degree at most {MAX_FORM_DEGREE}, got {}",
            w.degree()
        )));
    }
    let geo = LocalGeometry::new(f, p)?;
    let comps = w.jets(&geo)?;
    Ok(alternating_delta(&geo, w.degree(), &comps))
}

/// `(d̄ω)(X̄, Ȳ)` for a 1-form through the invariant formula
/// `βX̄·ω(Ȳ) − βȲ·ω(X̄) − ω(ρ[βX̄, βȲ])`, with
/// `ρ[βX̄, βȲ]^m = X^j δ_j Y^m − Y^j δ_j X^m`.
pub fn dbar_1_on_fields(
    f: &FinslerStructure,
    w: &PiForm,
    a: &PiVectorField,
    b: &PiVectorField,
    p: &ChartPoint,
) -> Result<f64> {
    let geo = LocalGeometry::new(f, p)?;
    let n = geo.dim();
    let wj = w.jets(&geo)?;
    let xa = a.eval(&geo)?;
    let xb = b.eval(&geo)?;
    let pair = |u: &[Jet], v: &[Jet]| crate::jet::sum((0..n).map(|i| &u[i] * &v[i]));
    let w_b = pair(&wj, &xb);
    let w_a = pair(&wj, &xa);
    let mut out = 0.0;
    for j in 0..n {
        out += xa[j].value() * geo.delta(j, &w_b).value() - xb[j].value() * geo.delta(j, &w_a).value();
    }
    for m in 0..n {
        let mut br = 0.0;
        for j in 0..n {
            br += xa[j].value() * geo.delta(j, &xb[m]).value() - xb[j].value() * geo.delta(j, &xa[m]).value();
        }
        out -= wj[m].value() * br;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// A_X̄ and closedness

/// `(A_X)^i_j = δ_j X^i + F^i_kj X^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AOperatorValue(pub DMatrix<f64>);

pub fn a_operator(f: &FinslerStructure, x: &PiVectorField, p: &ChartPoint) -> Result<AOperatorValue> {
    let geo = LocalGeometry::new(f, p)?;
    Ok(AOperatorValue(a_operator_at(&geo, &x.eval(&geo)?)))
}

pub fn a_operator_at(geo: &LocalGeometry, xs: &[Jet]) -> DMatrix<f64> {
    let n = geo.dim();
    let fc = geo.coefficients_value();
    let d: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| geo.delta(j, &xs[i]).value()).collect())
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        d[i][j] + (0..n).map(|k| fc.get(i, k, j) * xs[k].value()).sum::<f64>()
    })
}

/// `d̄(i_X̄ g)` as a matrix.
pub fn closedness_matrix_at(geo: &LocalGeometry, xs: &[Jet]) -> DMatrix<f64> {
    one_form_dbar(geo, &geo.lower(xs))
}

/// `g_kl (A_X)^l_j − g_jl (A_X)^l_k`, row `j`, column `k`.
pub fn selfadjoint_matrix_at(geo: &LocalGeometry, xs: &[Jet]) -> DMatrix<f64> {
    let ga = geo.metric_value() * a_operator_at(geo, xs);
    // ga[(k, j)] = g_kl A^l_j
    ga.transpose() - ga
}

pub fn closedness_defect(f: &FinslerStructure, x: &PiVectorField, p: &ChartPoint) -> Result<f64> {
    let geo = LocalGeometry::new(f, p)?;
    Ok(tensor::max_abs(&closedness_matrix_at(&geo, &x.eval(&geo)?)))
}

pub fn selfadjoint_defect(f: &FinslerStructure, x: &PiVectorField, p: &ChartPoint) -> Result<f64> {
    let geo = LocalGeometry::new(f, p)?;
    Ok(tensor::max_abs(&selfadjoint_matrix_at(&geo, &x.eval(&geo)?)))
}

/// Components `g^{ij} δ_j f` of `grad f`.
pub fn gradient(f: &FinslerStructure, s: &ScalarField, p: &ChartPoint) -> Result<DVector<f64>> {
    let geo = LocalGeometry::new(f, p)?;
    PiVectorField::gradient(s.clone()).values(&geo)
}

// ---------------------------------------------------------------------------
// d̄² and the curvature obstruction

/// `d̄²f` computed twice: directly as `d̄(d̄f)` and as `R̂^m_ij ∂f/∂y^m`.
#[derive(Debug, Clone)]
pub struct DbarSquare {
    pub direct: DMatrix<f64>,
    pub via_torsion: DMatrix<f64>,
}

impl DbarSquare {
    pub fn residual(&self) -> f64 {
        tensor::max_abs(&(&self.direct - &self.via_torsion))
    }
}

pub fn dbar_sq_defect(f: &FinslerStructure, s: &ScalarField, p: &ChartPoint) -> Result<DbarSquare> {
    let geo = LocalGeometry::new(f, p)?;
    Ok(dbar_sq_at(&geo, s))
}

pub fn dbar_sq_at(geo: &LocalGeometry, s: &ScalarField) -> DbarSquare {
    let n = geo.dim();
    let (x, y) = geo.vars(2);
    let fj = s.on(&x, &y);
    let df: Vec<Jet> = (0..n).map(|j| geo.delta(j, &fj)).collect();
    let rhat = vh_torsion_at(geo);
    DbarSquare {
        direct: one_form_dbar(geo, &df),
        via_torsion: torsion_contraction(geo, &rhat, &fj),
    }
}

fn torsion_contraction(geo: &LocalGeometry, rhat: &tensor::Tensor3, fj: &Jet) -> DMatrix<f64> {
    let n = geo.dim();
    let dy: Vec<f64> = (0..n).map(|m| geo.vertical(m, fj).value()).collect();
    DMatrix::from_fn(n, n, |i, j| (0..n).map(|m| rhat.get(m, i, j) * dy[m]).sum())
}

/// Both sides of `g(A_X̄Ȳ, Z̄) − g(A_X̄Z̄, Ȳ) = γ(R̂(Ȳ, Z̄))·f` for `X̄ = grad f`
/// on the coordinate frame.
#[derive(Debug, Clone)]
pub struct GradientObstruction {
    pub lhs: DMatrix<f64>,
    pub rhs: DMatrix<f64>,
}

impl GradientObstruction {
    pub fn residual(&self) -> f64 {
        tensor::max_abs(&(&self.lhs - &self.rhs))
    }

    pub fn lhs_max(&self) -> f64 {
        tensor::max_abs(&self.lhs)
    }

    pub fn rhs_max(&self) -> f64 {
        tensor::max_abs(&self.rhs)
    }
}

pub fn eq212_residual(f: &FinslerStructure, s: &ScalarField, p: &ChartPoint) -> Result<GradientObstruction> {
    let geo = LocalGeometry::new(f, p)?;
    gradient_obstruction_at(&geo, s)
}

pub fn gradient_obstruction_at(geo: &LocalGeometry, s: &ScalarField) -> Result<GradientObstruction> {
    let xs = PiVectorField::gradient(s.clone()).eval(geo)?;
    let (x, y) = geo.vars(2);
    let rhat = vh_torsion_at(geo);
    Ok(GradientObstruction {
        lhs: selfadjoint_matrix_at(geo, &xs),
        rhs: torsion_contraction(geo, &rhat, &s.on(&x, &y)),
    })
}

/// Max-norm of `∂f/∂y^i − L⁻¹ ℓ_i y^k ∂f/∂y^k`; vanishes exactly when the
/// `y`-dependence of `f` near `p` is through `L` alone.
pub fn eq214_residual(f: &FinslerStructure, s: &ScalarField, p: &ChartPoint) -> Result<f64> {
    let geo = LocalGeometry::new(f, p)?;
    Ok(radial_defect_at(&geo, s))
}

pub fn radial_defect_at(geo: &LocalGeometry, s: &ScalarField) -> f64 {
    let n = geo.dim();
    let (x, y) = geo.vars(1);
    let fj = s.on(&x, &y);
    let dy: Vec<f64> = (0..n).map(|i| geo.vertical(i, &fj).value()).collect();
    let yv = &geo.point().y;
    let euler: f64 = (0..n).map(|k| yv[k] * dy[k]).sum();
    let l = geo.lagrangian().value();
    let ell = geo.ell_value();
    (0..n).map(|i| (dy[i] - ell[i] * euler / l).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Lie derivative of g

#[derive(Debug, Clone, Serialize)]
pub struct LieReport {
    /// max-norm of `(𝔏_{βX̄} g)(δ̄_i, δ̄_j)`
    pub lie_defect: f64,
    pub closedness_defect: f64,
    /// max-norm of `i_X̄ d̄g`, the hypothesis under which the two defects
    /// vanish together
    pub hypothesis_residual: f64,
}

/// `(𝔏_{βX̄} g)_ij = X^k δ_k g_ij + g_kj δ_i X^k + g_ik δ_j X^k`.
pub fn lie_metric_matrix_at(geo: &LocalGeometry, xs: &[Jet]) -> DMatrix<f64> {
    let n = geo.dim();
    let g = geo.metric();
    let gv = geo.metric_value();
    let dx: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|k| geo.delta(i, &xs[k]).value()).collect())
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let mut v = 0.0;
        for k in 0..n {
            v += xs[k].value() * geo.delta(k, &g[i][j]).value();
            v += gv[(k, j)] * dx[i][k] + gv[(i, k)] * dx[j][k];
        }
        v
    })
}

/// Alternating `δ`-sum applied to the symmetric array `g`:
/// `(d̄g)_abc = δ_a g_bc − δ_b g_ac + δ_c g_ab`.
fn dbar_metric(geo: &LocalGeometry) -> tensor::Tensor3 {
    let n = geo.dim();
    let g: Vec<Jet> = geo.metric().iter().flat_map(|r| r.iter().cloned()).collect();
    let v = alternating_delta(geo, 2, &g);
    tensor::Tensor3::from_fn(n, |a, b, c| v.get(&[a, b, c]))
}

pub fn lie_metric_defect(f: &FinslerStructure, x: &PiVectorField, p: &ChartPoint) -> Result<LieReport> {
    let geo = LocalGeometry::new(f, p)?;
    lie_report_at(&geo, x)
}

pub fn lie_report_at(geo: &LocalGeometry, x: &PiVectorField) -> Result<LieReport> {
    let n = geo.dim();
    let xs = x.eval(geo)?;
    let dg = dbar_metric(geo);
    let mut hyp: f64 = 0.0;
    for b in 0..n {
        for c in 0..n {
            let v: f64 = (0..n).map(|a| xs[a].value() * dg.get(a, b, c)).sum();
            hyp = hyp.max(v.abs());
        }
    }
    Ok(LieReport {
        lie_defect: tensor::max_abs(&lie_metric_matrix_at(geo, &xs)),
        closedness_defect: tensor::max_abs(&closedness_matrix_at(geo, &xs)),
        hypothesis_residual: hyp,
    })
}

// ---------------------------------------------------------------------------
// Involutivity of X̄^⊥

#[derive(Debug, Clone, Serialize)]
pub struct InvolutivityReport {
    /// `max |g(ρ[βȲ_a, βȲ_b], X̄)|`
    pub bracket_defect: f64,
    /// `max |g(A_X̄Ȳ_b, Ȳ_a) − g(Ȳ_b, A_X̄Ȳ_a)|`
    pub operator_defect: f64,
    /// entrywise difference of the two computations
    pub agreement: f64,
}

pub fn involutivity_defect(f: &FinslerStructure, x: &PiVectorField, p: &ChartPoint) -> Result<InvolutivityReport> {
    let geo = LocalGeometry::new(f, p)?;
    involutivity_at(&geo, x)
}

/// The distribution `{Ȳ : g(X̄, Ȳ) = 0}` is spanned near `p` by
/// `Ȳ_a = v_a − g(X̄, v_a)/g(X̄, X̄) X̄`, with `v_a` a `g(p)`-orthonormal basis
/// of `X̄(p)^⊥`.
pub fn involutivity_at(geo: &LocalGeometry, x: &PiVectorField) -> Result<InvolutivityReport> {
    let n = geo.dim();
    let xs = x.eval(geo)?;
    let gv = geo.metric_value();
    let xv = DVector::from_iterator(n, xs.iter().map(Jet::value));
    let xx = xv.dot(&(&gv * &xv));
    if !(xx.sqrt() > 1e-12) {
        return Err(FinslerError::DegenerateField(format!(
            "field vanishes at {}",
            geo.point()
        )));
    }
    // Gram-Schmidt on projected coordinate vectors
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for a in 0..n {
        let mut v = DVector::from_fn(n, |i, _| if i == a { 1.0 } else { 0.0 });
        let c = xv.dot(&(&gv * &v)) / xx;
        v -= &xv * c;
        for u in &basis {
            let c = u.dot(&(&gv * &v));
            v -= u * c;
        }
        let norm = v.dot(&(&gv * &v)).sqrt();
        if norm > 1e-8 {
            basis.push(v / norm);
        }
        if basis.len() == n - 1 {
            break;
        }
    }

    let lx = geo.lower(&xs);
    let xx_j = crate::jet::sum((0..n).map(|i| &lx[i] * &xs[i]));
    let proto = &xs[0];
    let fields: Vec<Vec<Jet>> = basis
        .iter()
        .map(|v| {
            let gxv = crate::jet::sum((0..n).map(|i| &lx[i] * v[i]));
            let c = &gxv / &xx_j;
            (0..n).map(|i| proto.constant_like(v[i]) - &c * &xs[i]).collect()
        })
        .collect();

    let a_op = a_operator_at(geo, &xs);
    let gx = &gv * &xv;
    let mut bracket_defect: f64 = 0.0;
    let mut operator_defect: f64 = 0.0;
    let mut agreement: f64 = 0.0;
    for a in 0..fields.len() {
        for b in 0..fields.len() {
            let ya = &fields[a];
            let yb = &fields[b];
            let mut br = DVector::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    br[i] += ya[j].value() * geo.delta(j, &yb[i]).value() - yb[j].value() * geo.delta(j, &ya[i]).value();
                }
            }
            let w1 = br.dot(&gx);
            let yav = &basis[a];
            let ybv = &basis[b];
            let w2 = (&a_op * ybv).dot(&(&gv * yav)) - ybv.dot(&(&gv * (&a_op * yav)));
            bracket_defect = bracket_defect.max(w1.abs());
            operator_defect = operator_defect.max(w2.abs());
            agreement = agreement.max((w1 - w2).abs());
        }
    }
    Ok(InvolutivityReport {
        bracket_defect,
        operator_defect,
        agreement,
    })
}

// ---------------------------------------------------------------------------
// Randers and conformal transfers

fn base_metric_inverse(base: &FinslerStructure, geo: &LocalGeometry) -> Result<(Vec<Vec<Jet>>, Jet, Vec<Jet>, Vec<Jet>)> {
    let (x, y) = geo.vars(3);
    let mj = metric_jets(base, &x, &y);
    let g_inv = tensor::invert(&mj.g, geo.point())?;
    Ok((g_inv, mj.l, x, y))
}

/// `m̄ = b̄ − L⁻²α η̄`, where `g(b̄, ·) = b` and `α = b_i y^i`, all relative
/// to the base structure `L`.
pub fn randers_m_field(base: &FinslerStructure, b: &CovectorField) -> PiVectorField {
    let base = base.clone();
    let b = b.clone();
    PiVectorField::new("randers_m", move |geo| {
        let (g_inv, l, x, y) = base_metric_inverse(&base, geo)?;
        let n = geo.dim();
        let bv = b.eval(&x);
        let alpha = crate::jet::sum((0..n).map(|i| &bv[i] * &y[i]));
        let c = &alpha / &(&l * &l);
        Ok((0..n)
            .map(|i| crate::jet::sum((0..n).map(|j| &g_inv[i][j] * &bv[j])) - &c * &y[i])
            .collect())
    })
}

/// `τ m̄` with `τ = L*/L = 1 + α/L`.
pub fn randers_tau_m_field(base: &FinslerStructure, b: &CovectorField) -> PiVectorField {
    let m = randers_m_field(base, b);
    let base = base.clone();
    let b = b.clone();
    PiVectorField::new("randers_tau_m", move |geo| {
        let ms = m.eval(geo)?;
        let (x, y) = geo.vars(3);
        let l = base.lagrangian_jet(&x, &y);
        let bv = b.eval(&x);
        let n = geo.dim();
        let alpha = crate::jet::sum((0..n).map(|i| &bv[i] * &y[i]));
        let tau = 1.0 + &alpha / &l;
        Ok(ms.iter().map(|c| &tau * c).collect())
    })
}

/// Max-norm of the antisymmetrized `∂_i b_j` at `p`.
pub fn covector_curl(b: &CovectorField, p: &ChartPoint) -> f64 {
    let n = p.dim();
    let (x, _) = crate::field::chart_variables(p, 1);
    let bv = b.eval(&x);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((bv[j].partial(&[i]) - bv[i].partial(&[j])).abs());
        }
    }
    worst
}

/// Tolerance on `|db|` for the Randers transfer precondition.
pub const CLOSED_COVECTOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct RandersTransferReport {
    /// `|ℓ(m̄)|`
    pub ell_m: f64,
    /// max-norm of `i_m̄ g* − i_{τm̄} g`, with `g*` differentiated from `L*`
    pub dual_residual: f64,
    /// max-norm of `i_m̄ g* − i_{τm̄} g − ℓ*(m̄) ℓ*`
    pub corrected_dual_residual: f64,
    /// `ℓ*(m̄) = b(m̄) = |b|² − α²/L²`
    pub ell_star_m: f64,
    /// max-norm of `g*` minus `τ(g − ℓ⊗ℓ) + ℓ*⊗ℓ*`
    pub formula_residual: f64,
    /// closedness defect of `m̄` in `(M, L*)`
    pub defect_star: f64,
    /// closedness defect of `τm̄` in `(M, L)`
    pub defect_base: f64,
    /// `|db|` at the point
    pub curl: f64,
}

impl RandersTransferReport {
    /// Whether the two closedness verdicts coincide under `tol`.
    pub fn verdicts_agree(&self, tol: f64) -> bool {
        (self.defect_star < tol) == (self.defect_base < tol)
    }
}

pub fn randers_closedness_transfer(
    base: &FinslerStructure,
    b: &CovectorField,
    p: &ChartPoint,
) -> Result<RandersTransferReport> {
    let curl = covector_curl(b, p);
    if curl > CLOSED_COVECTOR_TOL {
        return Err(FinslerError::Precondition(format!(
            "covector is not closed at {p} (|db| = {curl:e})"
        )));
    }
    let star = randers_change(base, b.clone());
    let geo_s = LocalGeometry::new(&star, p)?;
    let geo_b = LocalGeometry::new(base, p)?;
    let n = p.dim();

    let m = randers_m_field(base, b);
    let tm = randers_tau_m_field(base, b);
    let ms = m.eval(&geo_s)?;
    let mv = DVector::from_iterator(n, ms.iter().map(Jet::value));
    let tmv = tm.values(&geo_b)?;

    let ell = geo_b.ell_value();
    let ell_star = geo_s.ell_value();
    let gs = geo_s.metric_value();
    let gb = geo_b.metric_value();
    let lhs = &gs * &mv;
    let rhs = &gb * &tmv;
    let ell_star_m = ell_star.dot(&mv);
    let dual = &lhs - &rhs;
    let corrected = &dual - &ell_star * ell_star_m;

    let tau = geo_s.lagrangian().value() / geo_b.lagrangian().value();
    let formula = &gb * tau - &ell * ell.transpose() * tau + &ell_star * ell_star.transpose();

    Ok(RandersTransferReport {
        ell_m: ell.dot(&mv).abs(),
        dual_residual: dual.amax(),
        corrected_dual_residual: corrected.amax(),
        ell_star_m,
        formula_residual: tensor::max_abs(&(&gs - formula)),
        defect_star: tensor::max_abs(&closedness_matrix_at(&geo_s, &ms)),
        defect_base: tensor::max_abs(&closedness_matrix_at(&geo_b, &tm.eval(&geo_b)?)),
        curl,
    })
}

#[derive(Debug, Clone)]
pub struct ConformalTransferReport {
    /// `d̄ i_X̄ g̃` in the transformed structure
    pub transformed: DMatrix<f64>,
    /// `e^{2σ}(d̄ i_X̄ g + 2 d̄σ ∧ i_X̄ g)` from the base structure
    pub predicted: DMatrix<f64>,
    /// `d̄ i_X̄ g` in the base structure
    pub base: DMatrix<f64>,
    /// `σ` and `d̄σ` at the point
    pub sigma: f64,
    pub dsigma: DVector<f64>,
}

impl ConformalTransferReport {
    pub fn transformed_defect(&self) -> f64 {
        tensor::max_abs(&self.transformed)
    }

    pub fn predicted_defect(&self) -> f64 {
        tensor::max_abs(&self.predicted)
    }

    pub fn base_defect(&self) -> f64 {
        tensor::max_abs(&self.base)
    }

    pub fn residual(&self) -> f64 {
        tensor::max_abs(&(&self.transformed - &self.predicted))
    }
}

/// Closedness of `X̄` under `L → e^σ L`, measured and predicted.
///
/// The prediction differentiates `e^{2σ} i_X̄ g` along the base structure's
/// horizontal frame, so it matches the measurement exactly when `i_X̄ g` does
/// not depend on `y` (for example `X̄ = grad h` with `h = h(x)`).
pub fn conformal_closedness_transfer(
    base: &FinslerStructure,
    x: &PiVectorField,
    sigma: &PositionFunction,
    p: &ChartPoint,
) -> Result<ConformalTransferReport> {
    let tilde = conformal_change(base, sigma.clone());
    let geo_t = LocalGeometry::new(&tilde, p)?;
    let geo_b = LocalGeometry::new(base, p)?;
    let n = p.dim();
    let xb = x.eval(&geo_b)?;
    let xt = x.eval(&geo_t)?;
    let base_m = closedness_matrix_at(&geo_b, &xb);
    let transformed = closedness_matrix_at(&geo_t, &xt);

    let (xj, _) = geo_b.vars(1);
    let s = sigma.eval(&xj);
    let ds = DVector::from_fn(n, |i, _| s.partial(&[i]));
    let w = geo_b.metric_value() * DVector::from_iterator(n, xb.iter().map(Jet::value));
    let k = (2.0 * s.value()).exp();
    let predicted = DMatrix::from_fn(n, n, |i, j| k * (base_m[(i, j)] + 2.0 * (ds[i] * w[j] - ds[j] * w[i])));
    Ok(ConformalTransferReport {
        transformed,
        predicted,
        base: base_m,
        sigma: s.value(),
        dsigma: ds,
    })
}
