//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL ...` line that survives output capture.

mod common;

use std::io::Write;

use common::{riemann_oracle, sphere_riemann};
use finsler::connection::structural_residuals;
use finsler::curvature::{
    contraction_residual, fit_scalar_curvature_at, h_curvature_at, ricci_of, scalar_of, vh_torsion_at,
};
use finsler::metric::{self, riemannian, CovectorField, FinslerStructure, MetricField, PositionFunction};
use finsler::pi::{
    closedness_matrix_at, conformal_closedness_transfer, dbar_sq_at, gradient_obstruction_at, radial_defect_at,
    randers_closedness_transfer, selfadjoint_matrix_at,
};
use finsler::probes;
use finsler::verify::{ad_fd_discrepancy, run, RunConfig};
use finsler::{ChartPoint, LocalGeometry, PiVectorField, ScalarField};
use nalgebra::DMatrix;

const POINTS: usize = 20;
const SEED: u64 = 1;

fn report(criterion: &str, pass: bool, detail: String) {
    let line = format!(
        "criterion {criterion:<3} {}  {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn sample(s: &FinslerStructure) -> Vec<(ChartPoint, LocalGeometry)> {
    s.sample(POINTS, SEED)
        .unwrap()
        .into_iter()
        .map(|p| {
            let g = LocalGeometry::new(s, &p).unwrap();
            (p, g)
        })
        .collect()
}

fn rel_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(1.0)
}

#[test]
fn criterion_01_structural_certificates() {
    let mut worst = (0.0f64, String::new());
    for s in metric::catalog() {
        for (_, geo) in sample(&s) {
            let r = structural_residuals(&geo);
            for (name, v) in [
                ("spray_defect", r.spray_defect),
                ("conservativity", r.conservativity),
                ("barthel_torsion", r.barthel_torsion),
                ("h_metricity", r.h_metricity),
                ("v_metricity", r.v_metricity),
                ("f_symmetry", r.f_symmetry),
                ("cartan_eta", r.cartan_eta),
                ("deflection", r.deflection),
            ] {
                if v > worst.0 || worst.1.is_empty() {
                    worst = (v, format!("{name} on {}", s.name()));
                }
            }
        }
    }
    let pass = worst.0 < 1e-7;
    report("1", pass, format!("max residual {:.3e} ({}) < 1e-7", worst.0, worst.1));
    assert!(pass);
}

#[test]
fn criterion_02_closed_iff_selfadjoint() {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for s in metric::catalog() {
        let fields = [
            probes::lifted_field(2),
            probes::polynomial_field(2),
            PiVectorField::gradient(probes::gradient_functions(2).remove(1).1),
        ];
        for (_, geo) in sample(&s) {
            for x in &fields {
                let xs = x.eval(&geo).unwrap();
                worst = worst.max(rel_pair(&closedness_matrix_at(&geo, &xs), &selfadjoint_matrix_at(&geo, &xs)));
                count += 1;
            }
        }
    }
    let pass = worst < 1e-7;
    report("2", pass, format!("max relative residual {worst:.3e} < 1e-7 over {count} (field, point) pairs"));
    assert!(pass);
}

#[test]
fn criterion_03_flatness_and_gradients() {
    let mut flat_torsion: f64 = 0.0;
    let mut flat_closed: f64 = 0.0;
    let mut flat_dsq: f64 = 0.0;
    for s in [metric::euclidean(2), metric::minkowski_quartic(2)] {
        let fs: Vec<ScalarField> = probes::gradient_functions(2).into_iter().map(|(_, f)| f).collect();
        for (_, geo) in sample(&s) {
            flat_torsion = flat_torsion.max(vh_torsion_at(&geo).max_abs());
            for f in fs.iter().chain(std::iter::once(&probes::curvature_probe())) {
                let xs = PiVectorField::gradient(f.clone()).eval(&geo).unwrap();
                flat_closed = flat_closed.max(closedness_matrix_at(&geo, &xs).amax());
            }
            for f in &fs {
                flat_dsq = flat_dsq.max(dbar_sq_at(&geo, f).direct.amax());
            }
        }
    }
    let sphere = metric::round_sphere();
    let probe = PiVectorField::gradient(probes::curvature_probe());
    let mut sphere_torsion: (f64, Option<ChartPoint>) = (0.0, None);
    let mut sphere_closed: (f64, Option<ChartPoint>) = (0.0, None);
    for (p, geo) in sample(&sphere) {
        let t = vh_torsion_at(&geo).max_abs();
        if t > sphere_torsion.0 {
            sphere_torsion = (t, Some(p.clone()));
        }
        let d = closedness_matrix_at(&geo, &probe.eval(&geo).unwrap()).amax();
        if d > sphere_closed.0 {
            sphere_closed = (d, Some(p));
        }
    }
    let pass = flat_torsion < 1e-8
        && flat_closed < 1e-7
        && flat_dsq < 1e-8
        && sphere_torsion.0 > 0.1
        && sphere_closed.0 > 1e-3;
    report(
        "3",
        pass,
        format!(
            "flat: |R̂| {flat_torsion:.1e}, closedness {flat_closed:.1e}, d̄²f {flat_dsq:.1e}; \
             sphere: |R̂| {:.3} at {}, grad ½(y¹)² defect {:.3} at {}",
            sphere_torsion.0,
            sphere_torsion.1.unwrap(),
            sphere_closed.0,
            sphere_closed.1.unwrap()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_gradient_obstruction() {
    let mut lines = Vec::new();
    let mut pass = true;
    for s in [metric::round_sphere(), metric::randers_sphere()] {
        let mut fs = vec![probes::curvature_probe()];
        fs.extend(probes::gradient_functions(2).into_iter().map(|(_, f)| f));
        let mut worst: f64 = 0.0;
        let mut best: (f64, Option<ChartPoint>) = (0.0, None);
        for (p, geo) in sample(&s) {
            for f in &fs {
                let o = gradient_obstruction_at(&geo, f).unwrap();
                worst = worst.max(rel_pair(&o.lhs, &o.rhs));
                let side = o.lhs_max().min(o.rhs_max());
                if side > best.0 {
                    best = (side, Some(p.clone()));
                }
            }
        }
        pass &= worst < 1e-6 && best.0 >= 1e-3;
        lines.push(format!(
            "{}: residual {worst:.1e}, smaller side {:.3} at {}",
            s.name(),
            best.0,
            best.1.unwrap()
        ));
    }
    report("4", pass, lines.join("; "));
    assert!(pass);
}

#[test]
fn criterion_05_riemannian_oracle() {
    let s = metric::round_sphere();
    let a = MetricField::new(|x| {
        let f = metric::stereographic_factor(x);
        let z = f.constant_like(0.0);
        vec![vec![f.clone(), z.clone()], vec![z, f]]
    });
    let (mut r_err, mut ric_err, mut sc_err, mut closed_form): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for (p, geo) in sample(&s) {
        let o = riemann_oracle(&a, &p.x);
        let r = h_curvature_at(&geo, &vh_torsion_at(&geo));
        for i in 0..2 {
            for h in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        // the h-curvature carries the opposite index convention
                        r_err = r_err.max((r.get(i, h, j, k) + o.riemann(i, h, j, k)).abs());
                        closed_form = closed_form.max((o.riemann(i, h, j, k) - sphere_riemann(&p.x, i, h, j, k)).abs());
                    }
                }
            }
        }
        let ric = ricci_of(&r);
        ric_err = ric_err.max((&ric - o.ricci().transpose()).amax());
        let sc = scalar_of(&geo.metric_inverse_value(), &ric);
        sc_err = sc_err.max((sc - 2.0).abs()).max((sc - o.scalar()).abs());
    }
    let mut contraction: f64 = 0.0;
    let mut all = metric::catalog();
    all.push(metric::euclidean(3));
    all.push(metric::minkowski_quartic(3));
    all.push(riemannian("warped3", 3, common::warped_space()));
    for m in &all {
        for (_, geo) in sample(m) {
            let rhat = vh_torsion_at(&geo);
            let r = h_curvature_at(&geo, &rhat);
            contraction = contraction.max(contraction_residual(&geo, &r, &rhat));
        }
    }
    let pass = r_err < 1e-6 && ric_err < 1e-6 && sc_err < 1e-6 && closed_form < 1e-9 && contraction < 1e-7;
    report(
        "5",
        pass,
        format!(
            "sphere vs oracle: R {r_err:.1e}, Ric {ric_err:.1e}, |Sc − 2| {sc_err:.1e} (oracle vs closed form {closed_form:.1e}); \
             contraction {contraction:.1e} on {} metrics",
            all.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_scalar_curvature_form() {
    let s = metric::round_sphere();
    let l = s.lagrangian().clone();
    let radial = ScalarField::new(move |x, y| {
        let v = l.on(x, y);
        (1.0 + &x[0] * 0.5) * &v * &v
    });
    let control = ScalarField::new(|_, y| &y[0] * &y[0]);
    let position = ScalarField::of_position(|x| x[0].clone());
    let (mut fit, mut kmin, mut kmax) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    let (mut rad, mut ctrl_min, mut pos) = (0.0f64, f64::INFINITY, 0.0f64);
    for (_, geo) in sample(&s) {
        let rhat = vh_torsion_at(&geo);
        let d = fit_scalar_curvature_at(&geo, &rhat, true);
        fit = fit.max(d.residual);
        kmin = kmin.min(d.kappa);
        kmax = kmax.max(d.kappa);
        rad = rad.max(radial_defect_at(&geo, &radial));
        ctrl_min = ctrl_min.min(radial_defect_at(&geo, &control));
        pos = pos.max(radial_defect_at(&geo, &position));
    }
    let pass = fit < 1e-6 && rad < 1e-9 && ctrl_min > 1e-2 && pos < 1e-9;
    report(
        "6",
        pass,
        format!(
            "constant-κ fit residual {fit:.1e} (κ ∈ [{kmin:.9}, {kmax:.9}]); h(x)L² {rad:.1e}; \
             (y¹)² min {ctrl_min:.3}; r = 0 case {pos:.1e}"
        ),
    );
    assert!(pass);
}

fn randers_cases() -> Vec<(FinslerStructure, CovectorField)> {
    let b = metric::preset_randers_covector();
    let exact = CovectorField::exact(PositionFunction::new(|x| (&x[0] * 0.2).sin() * 0.3 + &(&x[1] * &x[1]) * 0.1));
    vec![
        (metric::round_sphere(), b.clone()),
        (metric::minkowski_quartic(2), b),
        (metric::euclidean(2), exact),
        // closed in both structures
        (metric::euclidean(2), CovectorField::constant(vec![0.3, -0.2])),
    ]
}

fn randers_sweep<F: FnMut(&finsler::pi::RandersTransferReport)>(mut f: F) {
    for (base, b) in randers_cases() {
        let star = metric::randers_change(&base, b.clone());
        for p in star.sample(POINTS, SEED).unwrap() {
            f(&randers_closedness_transfer(&base, &b, &p).unwrap());
        }
    }
}

#[test]
fn criterion_07a_randers_direction_is_orthogonal() {
    let mut worst: f64 = 0.0;
    randers_sweep(|r| worst = worst.max(r.ell_m));
    let pass = worst < 1e-9;
    report("7a", pass, format!("max |ℓ(m̄)| {worst:.1e} < 1e-9"));
    assert!(pass);
}

/// The literal duality between `m̄` in the changed structure and `τm̄` in
/// the base is off by `ℓ*(m̄)ℓ*`; this test measures it as stated.
#[test]
fn criterion_07b_randers_duality() {
    let (mut literal, mut corrected, mut ell_star_m) = (0.0f64, 0.0f64, 0.0f64);
    randers_sweep(|r| {
        literal = literal.max(r.dual_residual);
        corrected = corrected.max(r.corrected_dual_residual);
        ell_star_m = ell_star_m.max(r.ell_star_m.abs());
    });
    let pass = literal < 1e-8;
    report(
        "7b",
        pass,
        format!(
            "max |i_m̄ g* − i_τm̄ g| {literal:.3e} < 1e-8; with the ℓ*(m̄)ℓ* term restored {corrected:.1e} \
             (max |ℓ*(m̄)| {ell_star_m:.3})"
        ),
    );
    assert!(pass, "literal duality residual {literal:e}");
}

#[test]
fn criterion_07c_randers_verdicts_agree() {
    let (mut points, mut agree, mut both_closed) = (0, 0, 0);
    randers_sweep(|r| {
        points += 1;
        if r.verdicts_agree(1e-7) {
            agree += 1;
        }
        if r.defect_star < 1e-7 && r.defect_base < 1e-7 {
            both_closed += 1;
        }
    });
    let pass = agree == points;
    report(
        "7c",
        pass,
        format!("closedness verdicts agree at {agree}/{points} points ({both_closed} closed in both)"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_conformal_change() {
    let x1 = PositionFunction::new(|x| x[0].clone());
    let constant = PositionFunction::constant(0.7);
    let (mut homothety, mut residual) = (0.0f64, 0.0f64);
    let mut best: (f64, Option<ChartPoint>) = (0.0, None);
    for base in [metric::euclidean(2), metric::minkowski_quartic(2), metric::round_sphere()] {
        let mut fields: Vec<PiVectorField> = probes::position_functions(2)
            .into_iter()
            .map(|(_, h)| PiVectorField::exact_dual(&base, h))
            .collect();
        if base.name() == "euclidean2" {
            fields.push(PiVectorField::constant(vec![0.0, 1.0]));
        }
        for (p, _) in sample(&base) {
            for x in &fields {
                homothety = homothety.max(conformal_closedness_transfer(&base, x, &constant, &p).unwrap().transformed_defect());
                let r = conformal_closedness_transfer(&base, x, &x1, &p).unwrap();
                residual = residual.max(rel_pair(&r.transformed, &r.predicted));
                if r.transformed_defect() > best.0 {
                    best = (r.transformed_defect(), Some(p.clone()));
                }
            }
        }
    }
    let pass = homothety < 1e-7 && residual < 1e-7 && best.0 > 1e-3;
    report(
        "8",
        pass,
        format!(
            "constant σ defect {homothety:.1e}; σ = x¹ vs prediction {residual:.1e}, defect {:.3} at {}",
            best.0,
            best.1.unwrap()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_ad_matches_fd() {
    let mut worst = (0.0f64, String::new());
    let mut fields = 0;
    for s in metric::catalog() {
        let l = s.lagrangian().clone();
        let l2 = l.clone();
        let e = ScalarField::new(move |x, y| {
            let v = l2.on(x, y);
            (&v * &v).scale(0.5)
        });
        let mut list = vec![("L".to_string(), l), ("E".to_string(), e)];
        for (name, f) in probes::gradient_functions(2) {
            list.push((name.to_string(), f));
        }
        list.push(("curvature probe".into(), probes::curvature_probe()));
        for (p, _) in sample(&s) {
            for (name, f) in &list {
                let d = ad_fd_discrepancy(f, &p).unwrap();
                fields += 1;
                if d > worst.0 || worst.1.is_empty() {
                    worst = (d, format!("{name} on {}", s.name()));
                }
            }
        }
    }
    let pass = worst.0 < 1e-5;
    report(
        "9",
        pass,
        format!("max relative AD/FD gap {:.2e} ({}) < 1e-5 over {fields} (field, point) pairs", worst.0, worst.1),
    );
    assert!(pass);
}

#[test]
fn criterion_10_determinism() {
    let mut identical = 0;
    let presets = metric::PRESET_NAMES;
    for name in presets {
        let config = RunConfig::new(*name);
        let a = run(&config).unwrap().to_json();
        let b = run(&config).unwrap().to_json();
        if a == b {
            identical += 1;
        }
    }
    let pass = identical == presets.len();
    report("10", pass, format!("{identical}/{} presets produce byte-identical reports", presets.len()));
    assert!(pass);
}
