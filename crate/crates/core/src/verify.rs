//! Check registry, sweep runner and JSON reports.
//!
//! Every check sweeps the same seeded sample of points. Identity checks
//! compare a residual, scaled by `max(1, |LHS|, |RHS|)` where both sides are
//! available, against `tol_identity`. Nonvanishing claims need one witness
//! point above `floor_nonzero`. Residuals are printed with 17 significant
//! digits, and checks are ordered by id, so reports are byte-stable.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::connection::{structural_residuals, StructuralResiduals};
use crate::curvature::{
    contraction_residual, fit_scalar_curvature_at, h_curvature_at, ricci_of, scalar_of, vh_torsion_at,
};
use crate::error::{FinslerError, Result};
use crate::field::{default_step, fd_partial, jet_eval, ScalarField};
use crate::geometry::LocalGeometry;
use crate::jet::Jet;
use crate::metric::{randers_change, CovectorField, FinslerStructure, PositionFunction, StructureKind};
use crate::pi::{
    closedness_matrix_at, conformal_closedness_transfer, dbar_sq_at, gradient_obstruction_at, involutivity_at,
    lie_report_at, radial_defect_at, randers_closedness_transfer, selfadjoint_matrix_at, PiVectorField,
};
use crate::point::ChartPoint;
use crate::probes;
use crate::spec::load_metric;
use crate::tensor::{self, Tensor3};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative tolerance of the AD-vs-FD comparison.
pub const AD_FD_TOL: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// preset name or path to a JSON description
    pub metric: String,
    /// check ids, or `["all"]`
    pub checks: Vec<String>,
    pub points: usize,
    pub seed: u64,
    pub tol_identity: f64,
    pub floor_nonzero: f64,
}

impl RunConfig {
    pub fn new(metric: impl Into<String>) -> Self {
        Self {
            metric: metric.into(),
            checks: vec!["all".into()],
            points: 20,
            seed: 1,
            tol_identity: 1e-7,
            floor_nonzero: 1e-3,
        }
    }

    pub fn with_checks(mut self, checks: &[&str]) -> Self {
        self.checks = checks.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 1 {
            return Err(FinslerError::Config("points must be at least 1".into()));
        }
        if !(self.tol_identity > 0.0 && self.tol_identity < self.floor_nonzero) {
            return Err(FinslerError::Config(format!(
                "need 0 < tol ({}) < floor ({})",
                self.tol_identity, self.floor_nonzero
            )));
        }
        self.selected().map(|_| ())
    }

    /// Selected registry entries in id order.
    fn selected(&self) -> Result<Vec<&'static CheckDef>> {
        if self.checks.is_empty() {
            return Err(FinslerError::Config("no checks selected".into()));
        }
        let mut out: Vec<&'static CheckDef> = Vec::new();
        for id in &self.checks {
            if id == "all" {
                out.extend(REGISTRY.iter());
                continue;
            }
            let def = REGISTRY
                .iter()
                .find(|d| d.id == id)
                .ok_or_else(|| FinslerError::Config(format!("unknown check `{id}` (see list-checks)")))?;
            out.push(def);
        }
        out.sort_by_key(|d| d.id);
        out.dedup_by_key(|d| d.id);
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "REPORT-ONLY")]
    ReportOnly,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::ReportOnly => "REPORT-ONLY",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub value: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: String,
    pub op: String,
    pub n_points: usize,
    pub max_residual: String,
    pub threshold: String,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub details: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub metric: String,
    pub checks: Vec<String>,
    pub points: usize,
    pub seed: u64,
    pub tol_identity: String,
    pub floor_nonzero: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricEcho {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub report_only: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub tool_version: String,
    pub config: ConfigEcho,
    pub metric: MetricEcho,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl CheckReport {
    /// True when every check that carries a verdict passed.
    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------------
// Registry

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Identity,
    ReportOnly,
}

pub struct CheckDef {
    pub id: &'static str,
    pub anchor: &'static str,
    pub op: &'static str,
    kind: Kind,
    run: fn(&Sweep) -> Outcome,
}

macro_rules! check {
    ($id:expr, $anchor:expr, $op:expr, $kind:ident, $run:expr) => {
        CheckDef {
            id: $id,
            anchor: $anchor,
            op: $op,
            kind: Kind::$kind,
            run: $run,
        }
    };
}

/// Sorted by id.
static REGISTRY: &[CheckDef] = &[
    check!("ad.fd", "∂̇_i∂̇_j E", "field::fd_partial", Identity, run_ad_fd),
    check!("contraction", "R̂(X̄,Ȳ) = R(X̄,Ȳ)η̄", "curvature::h_curvature", Identity, run_contraction),
    check!("dbar.sq", "d̄² ≠ 0", "pi::dbar_sq_defect", Identity, run_dbar_sq),
    check!("eq2.12", "γ(R̂(Ȳ,Z̄))·f", "pi::eq212_residual", Identity, run_eq212),
    check!("eq2.13", "R̂ = ω ∧ φ", "curvature::fit_scalar_curvature", Identity, run_eq213),
    check!("eq2.14", "d(log(fL^{-r})) o γ = 0", "pi::eq214_residual", Identity, run_eq214),
    check!("flatness", "R̂ = 0", "curvature::vh_torsion", Identity, run_flatness),
    check!("prop.isometry", "𝔏_{βX̄} g = i_X̄ d̄g + d̄ i_X̄ g", "pi::lie_metric_defect", ReportOnly, run_isometry),
    check!("prop.randers", "τ = L* L⁻¹", "pi::randers_closedness_transfer", Identity, run_randers_agree),
    check!("prop.randers.dual", "i_m̄ g* = i_{τm̄} g", "pi::randers_closedness_transfer", Identity, run_randers_dual),
    check!(
        "prop.randers.dual.corrected",
        "ℓ* = ℓ + dα o γ",
        "pi::randers_closedness_transfer",
        Identity,
        run_randers_corrected
    ),
    check!("prop.randers.ell_m", "ℓ(m̄) = 0", "pi::randers_m_field", Identity, run_randers_ell),
    check!("struct.barthel_torsion", "[J, Γ] = 0", "connection::barthel", Identity, run_barthel_torsion),
    check!("struct.cartan_eta", "T(X̄, η̄) = 0", "connection::cartan_coeffs", Identity, run_cartan_eta),
    check!("struct.conservative", "d_h E = 0", "connection::horizontal_derivative", Identity, run_conservative),
    check!("struct.deflection", "K ∘ β = 0", "connection::nabla_h", Identity, run_deflection),
    check!("struct.f_symmetry", "Q = 0", "connection::cartan_coeffs", Identity, run_f_symmetry),
    check!("struct.metricity", "∇g = 0", "connection::cartan_coeffs", Identity, run_metricity),
    check!("struct.projectors", "v∘h = h∘v = 0", "connection::projectors", Identity, run_projectors),
    check!("struct.spray_defect", "i_G Ω = −dE", "connection::spray_defect", Identity, run_spray),
    check!("thm2.13.involutive", "g(X̄,Ȳ) = 0 = g(X̄,Z̄)", "pi::involutivity_defect", Identity, run_involutive),
    check!("thm2.16.conformal", "∂σ/∂x^k = 0", "pi::conformal_closedness_transfer", Identity, run_conformal),
    check!("thm2.6", "d̄ω = 0", "pi::closedness_defect", Identity, run_thm26),
    check!("thm2.8.flat", "d̄² = 0", "pi::closedness_defect", Identity, run_thm28),
];

/// `(id, anchor, op)` for every registered check, in id order.
pub fn list_checks() -> Vec<(&'static str, &'static str, &'static str)> {
    REGISTRY.iter().map(|d| (d.id, d.anchor, d.op)).collect()
}

/// The `list-checks` table.
pub fn list_checks_table() -> String {
    let w = REGISTRY.iter().map(|d| d.id.len()).max().unwrap_or(0);
    let mut s = String::new();
    for d in REGISTRY {
        s.push_str(&format!("{:<w$}  {:<34}  {}\n", d.id, d.op, d.anchor, w = w));
    }
    s
}

// ---------------------------------------------------------------------------
// Sweep state

struct Sweep {
    structure: FinslerStructure,
    points: Vec<ChartPoint>,
    geos: Vec<Result<LocalGeometry>>,
    seed: u64,
    tol: f64,
    floor: f64,
}

impl Sweep {
    fn n(&self) -> usize {
        self.structure.dim()
    }
}

/// Result of one check before it becomes a record.
struct Outcome {
    residual: f64,
    threshold: f64,
    pass: bool,
    witness: Option<Witness>,
    details: BTreeMap<String, String>,
}

/// Running maximum with the point where it was attained and any per-point
/// errors.
#[derive(Default)]
struct Tracker {
    max: f64,
    at: Option<usize>,
    error: Option<(usize, String)>,
}

impl Tracker {
    fn push(&mut self, i: usize, v: f64) {
        if v.is_nan() {
            self.fail(i, "residual is NaN".into());
        } else if self.at.is_none() || v > self.max {
            self.max = v;
            self.at = Some(i);
        }
    }

    fn fail(&mut self, i: usize, msg: String) {
        if self.error.is_none() {
            self.error = Some((i, msg));
        }
    }

    fn record<T>(&mut self, i: usize, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.fail(i, e.to_string());
                None
            }
        }
    }
}

fn witness(sw: &Sweep, i: usize, value: f64, reason: impl Into<String>) -> Witness {
    witness_at(&sw.points, i, value, reason)
}

fn witness_at(points: &[ChartPoint], i: usize, value: f64, reason: impl Into<String>) -> Witness {
    Witness {
        x: points[i].x.clone(),
        y: points[i].y.clone(),
        value: fmt_num(value),
        reason: reason.into(),
    }
}

fn identity(sw: &Sweep, t: Tracker, details: BTreeMap<String, String>) -> Outcome {
    below(sw, t, sw.tol, details)
}

/// PASS iff no point errored and the maximum is below `threshold`; the
/// witness is the worst point on failure.
fn below(sw: &Sweep, t: Tracker, threshold: f64, details: BTreeMap<String, String>) -> Outcome {
    below_at(&sw.points, t, threshold, details)
}

fn below_at(points: &[ChartPoint], t: Tracker, threshold: f64, details: BTreeMap<String, String>) -> Outcome {
    if let Some((i, msg)) = t.error {
        return Outcome {
            residual: if t.at.is_some() { t.max } else { f64::NAN },
            threshold,
            pass: false,
            witness: Some(witness_at(points, i, f64::NAN, msg)),
            details,
        };
    }
    let pass = t.max < threshold;
    Outcome {
        residual: t.max,
        threshold,
        pass,
        witness: if pass {
            None
        } else {
            t.at.map(|i| witness_at(points, i, t.max, "residual above tolerance"))
        },
        details,
    }
}

fn scaled(res: f64, scale: f64) -> f64 {
    res / scale.max(1.0)
}

fn mat_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    scaled(tensor::max_abs(&(a - b)), tensor::max_abs(a).max(tensor::max_abs(b)))
}

fn each_geo<F: FnMut(usize, &LocalGeometry, &mut Tracker)>(sw: &Sweep, t: &mut Tracker, mut f: F) {
    for (i, g) in sw.geos.iter().enumerate() {
        match g {
            Ok(geo) => f(i, geo, t),
            Err(e) => t.fail(i, e.to_string()),
        }
    }
}

fn details(pairs: &[(&str, f64)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), fmt_num(*v))).collect()
}

// ---------------------------------------------------------------------------
// Structural checks

fn structural(sw: &Sweep, pick: fn(&StructuralResiduals) -> f64) -> Outcome {
    let mut t = Tracker::default();
    each_geo(sw, &mut t, |i, geo, t| t.push(i, pick(&structural_residuals(geo))));
    identity(sw, t, BTreeMap::new())
}

fn run_spray(sw: &Sweep) -> Outcome {
    structural(sw, |r| r.spray_defect)
}
fn run_conservative(sw: &Sweep) -> Outcome {
    structural(sw, |r| r.conservativity)
}
fn run_barthel_torsion(sw: &Sweep) -> Outcome {
    structural(sw, |r| r.barthel_torsion)
}
fn run_metricity(sw: &Sweep) -> Outcome {
    structural(sw, |r| r.h_metricity.max(r.v_metricity))
}
fn run_f_symmetry(sw: &Sweep) -> Outcome {
    structural(sw, |r| r.f_symmetry)
}
fn run_cartan_eta(sw: &Sweep) -> Outcome {
    structural(sw, |r| r.cartan_eta)
}
fn run_deflection(sw: &Sweep) -> Outcome {
    structural(sw, |r| r.deflection)
}
fn run_projectors(sw: &Sweep) -> Outcome {
    structural(sw, |r| r.projectors)
}

// ---------------------------------------------------------------------------
// Curvature checks

fn run_contraction(sw: &Sweep) -> Outcome {
    let mut t = Tracker::default();
    each_geo(sw, &mut t, |i, geo, t| {
        let rhat = vh_torsion_at(geo);
        let r = h_curvature_at(geo, &rhat);
        t.push(i, scaled(contraction_residual(geo, &r, &rhat), rhat.max_abs()));
    });
    identity(sw, t, BTreeMap::new())
}

fn run_flatness(sw: &Sweep) -> Outcome {
    let mut t = Tracker::default();
    let mut sc: f64 = 0.0;
    each_geo(sw, &mut t, |i, geo, t| {
        let rhat = vh_torsion_at(geo);
        let ric = ricci_of(&h_curvature_at(geo, &rhat));
        sc = sc.max(scalar_of(&geo.metric_inverse_value(), &ric).abs());
        t.push(i, rhat.max_abs());
    });
    let mut out = identity(sw, t, details(&[("max_abs_scalar_curvature", sc)]));
    if let Some(w) = out.witness.as_mut() {
        w.reason = "nonzero (v)h-torsion".into();
    }
    out
}

fn run_eq213(sw: &Sweep) -> Outcome {
    let mut t = Tracker::default();
    let mut constant_points = 0usize;
    let mut kmin = f64::INFINITY;
    let mut kmax = f64::NEG_INFINITY;
    each_geo(sw, &mut t, |i, geo, t| {
        let rhat = vh_torsion_at(geo);
        let scale = rhat.max_abs();
        let fit = fit_scalar_curvature_at(geo, &rhat, true);
        let res = if scaled(fit.residual, scale) < sw.tol {
            constant_points += 1;
            kmin = kmin.min(fit.kappa);
            kmax = kmax.max(fit.kappa);
            fit.residual
        } else {
            fit_scalar_curvature_at(geo, &rhat, false).residual
        };
        t.push(i, scaled(res, scale));
    });
    let mut d = BTreeMap::new();
    d.insert("points_with_constant_kappa_fit".into(), constant_points.to_string());
    if constant_points > 0 {
        d.insert("kappa_min".into(), fmt_num(kmin));
        d.insert("kappa_max".into(), fmt_num(kmax));
    }
    identity(sw, t, d)
}

// ---------------------------------------------------------------------------
// π-calculus checks

fn run_thm26(sw: &Sweep) -> Outcome {
    let n = sw.n();
    let fields = probes::probe_fields(n);
    let mut t = Tracker::default();
    let mut per_family: BTreeMap<String, f64> = BTreeMap::new();
    each_geo(sw, &mut t, |i, geo, t| {
        for (family, x) in &fields {
            if let Some(xs) = t.record(i, x.eval(geo)) {
                let r = mat_pair(&closedness_matrix_at(geo, &xs), &selfadjoint_matrix_at(geo, &xs));
                let e = per_family.entry(format!("max_residual_{family}")).or_insert(0.0);
                *e = e.max(r);
                t.push(i, r);
            }
        }
    });
    identity(sw, t, per_family.into_iter().map(|(k, v)| (k, fmt_num(v))).collect())
}

fn gradient_probe_functions(n: usize) -> Vec<(&'static str, ScalarField)> {
    let mut fs = vec![("curvature_probe", probes::curvature_probe())];
    fs.extend(probes::gradient_functions(n));
    fs
}

fn run_thm28(sw: &Sweep) -> Outcome {
    let fs = gradient_probe_functions(sw.n());
    let mut torsion = Tracker::default();
    let mut closed = Tracker::default();
    each_geo(sw, &mut closed, |i, geo, t| {
        torsion.push(i, vh_torsion_at(geo).max_abs());
        for (_, f) in &fs {
            let x = PiVectorField::gradient(f.clone());
            if let Some(xs) = t.record(i, x.eval(geo)) {
                t.push(i, tensor::max_abs(&closedness_matrix_at(geo, &xs)));
            }
        }
    });
    let flat = torsion.max < sw.tol && torsion.error.is_none();
    let mut d = details(&[("max_abs_vh_torsion", torsion.max)]);
    d.insert("regime".into(), if flat { "flat" } else { "curved" }.into());
    if flat {
        // every gradient must be closed
        return identity(sw, closed, d);
    }
    if let Some((i, msg)) = closed.error {
        return Outcome {
            residual: f64::NAN,
            threshold: sw.floor,
            pass: false,
            witness: Some(witness(sw, i, f64::NAN, msg)),
            details: d,
        };
    }
    // curved: some gradient must fail to be closed
    let pass = closed.max > sw.floor;
    Outcome {
        residual: closed.max,
        threshold: sw.floor,
        pass,
        witness: closed.at.map(|i| {
            witness(
                sw,
                i,
                closed.max,
                if pass {
                    "gradient not closed where (v)h-torsion is nonzero"
                } else {
                    "no gradient probe exceeds the floor"
                },
            )
        }),
        details: d,
    }
}

fn run_dbar_sq(sw: &Sweep) -> Outcome {
    let fs = gradient_probe_functions(sw.n());
    let mut t = Tracker::default();
    let mut size: f64 = 0.0;
    each_geo(sw, &mut t, |i, geo, t| {
        for (_, f) in &fs {
            let d = dbar_sq_at(geo, f);
            size = size.max(tensor::max_abs(&d.direct));
            t.push(i, mat_pair(&d.direct, &d.via_torsion));
        }
    });
    identity(sw, t, details(&[("max_abs_dbar_squared", size)]))
}

fn run_eq212(sw: &Sweep) -> Outcome {
    let fs = gradient_probe_functions(sw.n());
    let mut t = Tracker::default();
    let mut best: Option<(usize, f64)> = None;
    each_geo(sw, &mut t, |i, geo, t| {
        for (_, f) in &fs {
            if let Some(o) = t.record(i, gradient_obstruction_at(geo, f)) {
                t.push(i, mat_pair(&o.lhs, &o.rhs));
                let side = o.lhs_max().min(o.rhs_max());
                if best.is_none_or(|(_, b)| side > b) {
                    best = Some((i, side));
                }
            }
        }
    });
    let side = best.map_or(0.0, |b| b.1);
    let mut d = details(&[("max_smaller_side", side)]);
    d.insert("nontrivial".into(), (side >= sw.floor).to_string());
    let mut out = identity(sw, t, d);
    if out.pass {
        if let Some((i, v)) = best.filter(|b| b.1 >= sw.floor) {
            out.witness = Some(witness(sw, i, v, "both sides above the floor"));
        }
    }
    out
}

fn run_eq214(sw: &Sweep) -> Outcome {
    let ls = sw.structure.lagrangian().clone();
    let radial = ScalarField::new(move |x, y| {
        let l = ls.on(x, y);
        (1.0 + &x[0] * 0.5) * &l * &l
    });
    let position = ScalarField::of_position(|x| x[0].clone());
    let control = ScalarField::new(|_, y| &y[0] * &y[0]);
    let mut t = Tracker::default();
    let mut ctrl = Tracker::default();
    each_geo(sw, &mut t, |i, geo, t| {
        let lsq = geo.lagrangian().value().powi(2);
        t.push(i, scaled(radial_defect_at(geo, &radial), lsq));
        t.push(i, radial_defect_at(geo, &position));
        ctrl.push(i, radial_defect_at(geo, &control));
    });
    let mut d = details(&[("control_max", ctrl.max)]);
    let control_ok = ctrl.max > sw.floor || sw.n() == 1;
    d.insert("control_detected".into(), control_ok.to_string());
    let mut out = identity(sw, t, d);
    if out.pass && !control_ok {
        out.pass = false;
        out.witness = ctrl.at.map(|i| witness(sw, i, ctrl.max, "negative control not detected"));
    }
    out
}

fn run_involutive(sw: &Sweep) -> Outcome {
    let n = sw.n();
    let mut closed: Vec<PiVectorField> = vec![PiVectorField::eta()];
    for (name, h) in probes::position_functions(n) {
        closed.push(PiVectorField::exact_dual(&sw.structure, h).renamed(format!("grad {name}")));
    }
    let open = vec![probes::lifted_field(n), probes::polynomial_field(n)];
    let mut t = Tracker::default();
    let mut open_defect: f64 = 0.0;
    each_geo(sw, &mut t, |i, geo, t| {
        for x in &closed {
            if let Some(r) = t.record(i, involutivity_at(geo, x)) {
                t.push(i, r.bracket_defect);
                t.push(i, r.agreement);
            }
        }
        for x in &open {
            match involutivity_at(geo, x) {
                Ok(r) => {
                    open_defect = open_defect.max(r.bracket_defect);
                    t.push(i, r.agreement);
                }
                Err(FinslerError::DegenerateField(_)) => {}
                Err(e) => t.fail(i, e.to_string()),
            }
        }
    });
    identity(sw, t, details(&[("max_defect_non_closed_probes", open_defect)]))
}

fn run_isometry(sw: &Sweep) -> Outcome {
    let n = sw.n();
    let mut fields: Vec<PiVectorField> = vec![PiVectorField::eta(), probes::lifted_field(n)];
    fields.push(PiVectorField::constant((0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()));
    for (name, h) in probes::position_functions(n) {
        fields.push(PiVectorField::exact_dual(&sw.structure, h).renamed(format!("grad {name}")));
    }
    let mut hyp = Tracker::default();
    let (mut held, mut agreed) = (0usize, 0usize);
    let (mut lie_max, mut closed_max) = (0.0f64, 0.0f64);
    each_geo(sw, &mut hyp, |i, geo, t| {
        for x in &fields {
            if let Some(r) = t.record(i, lie_report_at(geo, x)) {
                t.push(i, r.hypothesis_residual);
                lie_max = lie_max.max(r.lie_defect);
                closed_max = closed_max.max(r.closedness_defect);
                if r.hypothesis_residual < sw.tol {
                    held += 1;
                    if (r.lie_defect < sw.tol) == (r.closedness_defect < sw.tol) {
                        agreed += 1;
                    }
                }
            }
        }
    });
    let mut d = details(&[("max_lie_defect", lie_max), ("max_closedness_defect", closed_max)]);
    d.insert("hypothesis_held".into(), held.to_string());
    d.insert("agreed_when_held".into(), agreed.to_string());
    let mut out = identity(sw, hyp, d);
    out.witness = None;
    out
}

/// Base and closed covector for the Randers checks: the structure's own
/// when it is a Randers change, otherwise the structure itself with
/// `b = d(0.1x¹ + 0.15x¹x²)`.
fn randers_data(sw: &Sweep) -> (FinslerStructure, CovectorField, &'static str) {
    if let StructureKind::Randers { base, b } = sw.structure.kind() {
        return ((**base).clone(), b.clone(), "structure");
    }
    let n = sw.n();
    let b = CovectorField::new(move |x| {
        (0..n)
            .map(|i| match (i, n) {
                (0, 1) => x[0].constant_like(0.1),
                (0, _) => &(&x[1] * 0.15) + 0.1,
                (1, _) => &x[0] * 0.15,
                _ => x[0].constant_like(0.0),
            })
            .collect()
    });
    (sw.structure.clone(), b, "default covector d(0.1x¹ + 0.15x¹x²)")
}

fn randers_sweep<F>(sw: &Sweep, mut f: F) -> (Tracker, Vec<ChartPoint>, &'static str)
where
    F: FnMut(usize, &crate::pi::RandersTransferReport, &mut Tracker),
{
    let (base, b, source) = randers_data(sw);
    let mut t = Tracker::default();
    // points where the Randers change itself is a Finsler structure
    let star = randers_change(&base, b.clone());
    let points = match star.sample(sw.points.len(), sw.seed) {
        Ok(p) => p,
        Err(e) => {
            t.fail(0, e.to_string());
            return (t, sw.points.clone(), source);
        }
    };
    for (i, p) in points.iter().enumerate() {
        if let Some(r) = t.record(i, randers_closedness_transfer(&base, &b, p)) {
            f(i, &r, &mut t);
        }
    }
    (t, points, source)
}

fn with_source(mut o: Outcome, source: &str) -> Outcome {
    o.details.insert("randers_data".into(), source.into());
    o
}

fn run_randers_ell(sw: &Sweep) -> Outcome {
    let (t, pts, src) = randers_sweep(sw, |i, r, t| t.push(i, r.ell_m));
    with_source(below_at(&pts, t, sw.tol, BTreeMap::new()), src)
}

fn run_randers_dual(sw: &Sweep) -> Outcome {
    let mut ell_star_m: f64 = 0.0;
    let (t, pts, src) = randers_sweep(sw, |i, r, t| {
        ell_star_m = ell_star_m.max(r.ell_star_m.abs());
        t.push(i, r.dual_residual);
    });
    with_source(below_at(&pts, t, sw.tol, details(&[("max_abs_ell_star_of_m", ell_star_m)])), src)
}

fn run_randers_corrected(sw: &Sweep) -> Outcome {
    let mut formula: f64 = 0.0;
    let (t, pts, src) = randers_sweep(sw, |i, r, t| {
        formula = formula.max(r.formula_residual);
        t.push(i, r.corrected_dual_residual);
    });
    with_source(below_at(&pts, t, sw.tol, details(&[("max_metric_formula_residual", formula)])), src)
}

fn run_randers_agree(sw: &Sweep) -> Outcome {
    let tol = sw.tol;
    let (mut star, mut basem) = (0.0f64, 0.0f64);
    let mut both_closed = 0usize;
    let (t, pts, src) = randers_sweep(sw, |i, r, t| {
        star = star.max(r.defect_star);
        basem = basem.max(r.defect_base);
        if r.defect_star < tol && r.defect_base < tol {
            both_closed += 1;
        }
        t.push(i, if r.verdicts_agree(tol) { 0.0 } else { 1.0 });
    });
    let mut d = details(&[("max_defect_star", star), ("max_defect_base", basem)]);
    d.insert("points_closed_in_both".into(), both_closed.to_string());
    // a disagreeing point contributes 1
    let mut out = below_at(&pts, t, 0.5, d);
    if out.residual >= 0.5 {
        if let Some(w) = out.witness.as_mut() {
            w.reason = "closedness verdicts disagree".into();
        }
    }
    with_source(out, src)
}

fn run_conformal(sw: &Sweep) -> Outcome {
    let n = sw.n();
    let (base, sigma, source): (FinslerStructure, PositionFunction, &str) = match sw.structure.kind() {
        StructureKind::Conformal { base, sigma } => ((**base).clone(), sigma.clone(), "structure"),
        _ => (
            sw.structure.clone(),
            PositionFunction::new(|x| x[0].clone()),
            "default sigma = x¹",
        ),
    };
    let fields: Vec<PiVectorField> = probes::position_functions(n)
        .into_iter()
        .map(|(_, h)| PiVectorField::exact_dual(&base, h))
        .collect();
    let mut t = Tracker::default();
    let mut transformed = Tracker::default();
    let mut dsigma: f64 = 0.0;
    let mut base_defect: f64 = 0.0;
    for (i, p) in sw.points.iter().enumerate() {
        for x in &fields {
            if let Some(r) = t.record(i, conformal_closedness_transfer(&base, x, &sigma, p)) {
                dsigma = dsigma.max(r.dsigma.amax());
                base_defect = base_defect.max(r.base_defect());
                t.push(i, mat_pair(&r.transformed, &r.predicted));
                transformed.push(i, r.transformed_defect());
            }
        }
    }
    let homothety = dsigma < sw.tol;
    let mut d = details(&[
        ("max_transformed_defect", transformed.max),
        ("max_base_defect", base_defect),
        ("max_abs_dsigma", dsigma),
    ]);
    d.insert("sigma".into(), source.into());
    d.insert("homothety".into(), homothety.to_string());
    let mut out = identity(sw, t, d);
    if out.pass {
        if homothety {
            if transformed.max >= sw.tol {
                out.pass = false;
                out.witness = transformed.at.map(|i| witness(sw, i, transformed.max, "homothety broke closedness"));
            }
        } else if transformed.max > sw.floor {
            out.witness = transformed.at.map(|i| witness(sw, i, transformed.max, "closedness broken by non-constant sigma"));
        } else {
            out.pass = false;
            out.witness = transformed.at.map(|i| witness(sw, i, transformed.max, "no breakage above the floor"));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// AD vs FD

/// All multisets of `1..=max_degree` variables out of `nvars`, as sorted lists.
pub fn multi_indices(nvars: usize, max_degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_degree {
        let mut next = Vec::new();
        for v in &frontier {
            let start = v.last().copied().unwrap_or(0);
            for k in start..nvars {
                let mut w = v.clone();
                w.push(k);
                next.push(w);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Worst `|ad − fd| / max(1, |ad|)` over every partial of degree ≤ 3 of
/// `field` at `p`.
pub fn ad_fd_discrepancy(field: &ScalarField, p: &ChartPoint) -> Result<f64> {
    let jet: Jet = jet_eval(field, p, 3)?;
    let mut worst: f64 = 0.0;
    for vars in multi_indices(2 * p.dim(), 3) {
        let ad = jet.partial(&vars);
        let fd = fd_partial(field, p, &vars, default_step(vars.len()))?;
        worst = worst.max((ad - fd).abs() / ad.abs().max(1.0));
    }
    Ok(worst)
}

fn run_ad_fd(sw: &Sweep) -> Outcome {
    let l = sw.structure.lagrangian().clone();
    let l2 = l.clone();
    let e = ScalarField::new(move |x, y| {
        let v = l2.on(x, y);
        (&v * &v).scale(0.5)
    });
    let mut t = Tracker::default();
    for (i, p) in sw.points.iter().enumerate() {
        for f in [&l, &e] {
            if let Some(v) = t.record(i, ad_fd_discrepancy(f, p)) {
                t.push(i, v);
            }
        }
    }
    below(sw, t, AD_FD_TOL, BTreeMap::new())
}

// ---------------------------------------------------------------------------
// Runner

/// Runs the selected checks against an already-built structure.
pub fn run_on(structure: &FinslerStructure, config: &RunConfig) -> Result<CheckReport> {
    config.validate()?;
    let defs = config.selected()?;
    let points = structure.sample(config.points, config.seed)?;
    let geos = points.iter().map(|p| LocalGeometry::new(structure, p)).collect();
    let sw = Sweep {
        structure: structure.clone(),
        points,
        geos,
        seed: config.seed,
        tol: config.tol_identity,
        floor: config.floor_nonzero,
    };
    let mut records = Vec::with_capacity(defs.len());
    let (mut pass, mut fail, mut report_only) = (0, 0, 0);
    for def in defs {
        let o = (def.run)(&sw);
        let verdict = match (def.kind, o.pass) {
            (Kind::ReportOnly, _) => Verdict::ReportOnly,
            (Kind::Identity, true) => Verdict::Pass,
            (Kind::Identity, false) => Verdict::Fail,
        };
        match verdict {
            Verdict::Pass => pass += 1,
            Verdict::Fail => fail += 1,
            Verdict::ReportOnly => report_only += 1,
        }
        records.push(CheckRecord {
            id: def.id.into(),
            anchor: def.anchor.into(),
            op: def.op.into(),
            n_points: sw.points.len(),
            max_residual: fmt_num(o.residual),
            threshold: fmt_num(o.threshold),
            verdict,
            witness: o.witness,
            details: o.details,
        });
    }
    Ok(CheckReport {
        tool_version: TOOL_VERSION.into(),
        config: ConfigEcho {
            metric: config.metric.clone(),
            checks: config.checks.clone(),
            points: config.points,
            seed: config.seed,
            tol_identity: fmt_num(config.tol_identity),
            floor_nonzero: fmt_num(config.floor_nonzero),
        },
        metric: MetricEcho {
            name: structure.name().into(),
            dim: structure.dim(),
        },
        checks: records,
        summary: Summary {
            pass,
            fail,
            report_only,
        },
    })
}

/// Resolves the configured metric and runs the selected checks.
pub fn run(config: &RunConfig) -> Result<CheckReport> {
    config.validate()?;
    let s = load_metric(&config.metric)?;
    run_on(&s, config)
}

// ---------------------------------------------------------------------------
// Pointwise evaluation

pub const OBJECTS: &[&str] = &["g", "C", "G", "N", "F", "Rhat", "R", "Ric", "Sc"];

fn t3(t: &Tensor3) -> serde_json::Value {
    let n = t.dim();
    (0..n)
        .map(|a| (0..n).map(|b| (0..n).map(|c| t.get(a, b, c)).collect::<Vec<_>>()).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .into()
}

fn mat(m: &DMatrix<f64>) -> serde_json::Value {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .into()
}

/// Components of one object at a point, with its index layout.
pub fn eval_object(structure: &FinslerStructure, p: &ChartPoint, object: &str) -> Result<serde_json::Value> {
    if p.dim() != structure.dim() {
        return Err(FinslerError::Config(format!(
            "point has dimension {}, metric has dimension {}",
            p.dim(),
            structure.dim()
        )));
    }
    let geo = LocalGeometry::new(structure, p)?;
    let n = geo.dim();
    let (layout, values): (&str, serde_json::Value) = match object {
        "g" => ("g[i][j]", mat(&geo.metric_value())),
        "C" => (
            "C[i][j][k] = C_ijk",
            t3(&Tensor3::from_fn(n, |i, j, k| geo.cartan_lower_jets()[i][j][k].value())),
        ),
        "G" => ("G[i]", geo.spray_value().iter().copied().collect::<Vec<_>>().into()),
        "N" => ("N[i][j] = N^i_j", mat(&geo.barthel_value())),
        "F" => ("F[i][j][k] = F^i_jk", t3(&geo.coefficients_value())),
        "Rhat" => ("Rhat[i][j][k] = R^i_jk", t3(&vh_torsion_at(&geo))),
        "R" => {
            let r = h_curvature_at(&geo, &vh_torsion_at(&geo));
            let v: Vec<Vec<Vec<Vec<f64>>>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|h| (0..n).map(|j| (0..n).map(|k| r.get(i, h, j, k)).collect()).collect())
                        .collect()
                })
                .collect();
            ("R[i][h][j][k] = R^i_hjk", serde_json::to_value(v).expect("array"))
        }
        "Ric" => ("Ric[j][h]", mat(&ricci_of(&h_curvature_at(&geo, &vh_torsion_at(&geo))))),
        "Sc" => {
            let ric = ricci_of(&h_curvature_at(&geo, &vh_torsion_at(&geo)));
            ("scalar", scalar_of(&geo.metric_inverse_value(), &ric).into())
        }
        other => {
            return Err(FinslerError::Config(format!(
                "unknown object `{other}` (expected one of {})",
                OBJECTS.join(", ")
            )))
        }
    };
    Ok(serde_json::json!({
        "metric": structure.name(),
        "object": object,
        "layout": layout,
        "x": p.x,
        "y": p.y,
        "values": values,
    }))
}
