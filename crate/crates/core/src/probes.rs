//! Fixed probe fields and functions for the theorem sweeps.
//!
//! Three families of π-vector fields: lifts of vector fields on the base,
//! `y`-dependent polynomial fields, and gradients. Indices wrap modulo the
//! dimension, so every probe exists for `n ≥ 1`.

use crate::field::ScalarField;
use crate::metric::PositionFunction;
use crate::pi::PiVectorField;

/// `X^i = 1 + ½ x^{i+1} − 0.3 (x^i)²`
pub fn lifted_field(n: usize) -> PiVectorField {
    let comps = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            PositionFunction::new(move |x| 1.0 + &x[j] * 0.5 - &(&x[i] * &x[i]) * 0.3)
        })
        .collect();
    PiVectorField::lift("lift", comps)
}

/// `X^i = y^i x^{i+1} + 0.2 (y^{i+1})² − 0.1 x^i`
pub fn polynomial_field(n: usize) -> PiVectorField {
    let comps = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            ScalarField::new(move |x, y| &y[i] * &x[j] + &(&y[j] * &y[j]) * 0.2 - &x[i] * 0.1)
        })
        .collect();
    PiVectorField::from_components("polynomial", comps)
}

/// Probe functions for gradients:
/// `x¹x² + ½(y¹)²`, `x¹(y²)³ + y¹x²`, `exp(0.3x¹) y¹y²`.
pub fn gradient_functions(n: usize) -> Vec<(&'static str, ScalarField)> {
    let b = 1 % n;
    vec![
        (
            "f1",
            ScalarField::new(move |x, y| &x[0] * &x[b] + &(&y[0] * &y[0]) * 0.5),
        ),
        (
            "f2",
            ScalarField::new(move |x, y| &x[0] * &y[b].powi(3) + &y[0] * &x[b]),
        ),
        (
            "f3",
            ScalarField::new(move |x, y| (&x[0] * 0.3).exp() * &y[0] * &y[b]),
        ),
    ]
}

/// `f = ½(y¹)²`: its gradient is closed exactly where `R̂^m_jk ∂f/∂y^m`
/// vanishes, so it detects curvature.
pub fn curvature_probe() -> ScalarField {
    ScalarField::new(|_, y| (&y[0] * &y[0]).scale(0.5))
}

/// Every probe field, tagged by family.
pub fn probe_fields(n: usize) -> Vec<(&'static str, PiVectorField)> {
    let mut out = vec![("lift", lifted_field(n)), ("polynomial", polynomial_field(n))];
    for (name, f) in gradient_functions(n) {
        out.push(("gradient", PiVectorField::gradient(f).renamed(format!("grad {name}"))));
    }
    out
}

/// Functions of position whose gradients serve as d̄-closed probes:
/// `x¹ + ½x¹x²`, `exp(0.3x²) + 0.2x¹`, `x¹ − 0.4(x^n)²`.
pub fn position_functions(n: usize) -> Vec<(&'static str, PositionFunction)> {
    let b = 1 % n;
    let last = n - 1;
    vec![
        ("h1", PositionFunction::new(move |x| &x[0] + &(&x[0] * &x[b]) * 0.5)),
        ("h2", PositionFunction::new(move |x| (&x[b] * 0.3).exp() + &x[0] * 0.2)),
        ("h3", PositionFunction::new(move |x| &x[0] - &(&x[last] * &x[last]) * 0.4)),
    ]
}
