//! Scalar fields on the slit tangent bundle, their jets, and a
//! finite-difference oracle.

use std::fmt;
use std::sync::Arc;

use crate::error::{FinslerError, Result};
use crate::jet::{Jet, JetSpace, MAX_ORDER};
use crate::point::ChartPoint;

type FieldFn = dyn Fn(&[Jet], &[Jet]) -> Jet + Send + Sync;
type DomainFn = dyn Fn(&ChartPoint) -> bool + Send + Sync;

/// A smooth function `f(x, y)` written against jet arithmetic.
///
/// The closure receives the coordinate jets `x` and `y` and must only combine
/// them with jet operations, so evaluating it at any order yields exact partials.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<FieldFn>,
    domain: Option<Arc<DomainFn>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarField")
    }
}

impl ScalarField {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[Jet], &[Jet]) -> Jet + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            domain: None,
        }
    }

    pub fn with_domain<D>(mut self, domain: D) -> Self
    where
        D: Fn(&ChartPoint) -> bool + Send + Sync + 'static,
    {
        self.domain = Some(Arc::new(domain));
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |x, _| x[0].constant_like(c))
    }

    /// A function of position only.
    pub fn of_position<F>(f: F) -> Self
    where
        F: Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    {
        Self::new(move |x, _| f(x))
    }

    pub fn contains(&self, p: &ChartPoint) -> bool {
        self.domain.as_ref().is_none_or(|d| d(p))
    }

    /// Evaluates on already-built coordinate jets.
    pub fn on(&self, x: &[Jet], y: &[Jet]) -> Jet {
        (self.eval)(x, y)
    }

    /// Plain value at a point.
    pub fn value(&self, p: &ChartPoint) -> f64 {
        let (x, y) = chart_variables(p, 0);
        self.on(&x, &y).value()
    }
}

/// Coordinate jets `(x, y)` at `p` of the given order over `2n` variables.
pub fn chart_variables(p: &ChartPoint, order: usize) -> (Vec<Jet>, Vec<Jet>) {
    let n = p.dim();
    let space = JetSpace::new(2 * n, order);
    let x = (0..n).map(|i| space.variable(i, p.x[i])).collect();
    let y = (0..n).map(|i| space.variable(n + i, p.y[i])).collect();
    (x, y)
}

/// All partials of `field` at `p` up to `order`.
pub fn jet_eval(field: &ScalarField, p: &ChartPoint, order: usize) -> Result<Jet> {
    if order > MAX_ORDER {
        return Err(FinslerError::Capability(format!(
            "jet order {order} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    if p.y_norm() == 0.0 {
        return Err(FinslerError::Domain("direction y must be nonzero".into()));
    }
    if !field.contains(p) {
        return Err(FinslerError::Domain(format!("{p} is outside the field's domain")));
    }
    let (x, y) = chart_variables(p, order);
    Ok(field.on(&x, &y))
}

/// Default central-difference step for a partial of the given degree.
pub fn default_step(degree: usize) -> f64 {
    match degree {
        0 | 1 => 1e-3,
        2 => 2e-3,
        _ => 5e-3,
    }
}

fn stencil(count: usize) -> &'static [(f64, f64)] {
    // (offset in steps, weight) for the central difference of each degree
    match count {
        0 => &[(0.0, 1.0)],
        1 => &[(1.0, 0.5), (-1.0, -0.5)],
        2 => &[(1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)],
        3 => &[(2.0, 0.5), (1.0, -1.0), (-1.0, 1.0), (-2.0, -0.5)],
        _ => unreachable!(),
    }
}

fn central_difference(field: &ScalarField, p: &ChartPoint, counts: &[usize], h: f64) -> f64 {
    let base = p.coords();
    let n = p.dim();
    let active: Vec<(usize, usize)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(v, &c)| (v, c))
        .collect();
    let degree: usize = counts.iter().sum();

    let mut total = 0.0;
    let mut idx = vec![0usize; active.len()];
    loop {
        let mut z = base.clone();
        let mut w = 1.0;
        for (slot, &(v, c)) in active.iter().enumerate() {
            let (off, wt) = stencil(c)[idx[slot]];
            z[v] += off * h;
            w *= wt;
        }
        let q = ChartPoint {
            x: z[..n].to_vec(),
            y: z[n..].to_vec(),
        };
        total += w * field.value(&q);

        let mut slot = 0;
        loop {
            if slot == active.len() {
                return total / h.powi(degree as i32);
            }
            idx[slot] += 1;
            if idx[slot] < stencil(active[slot].1).len() {
                break;
            }
            idx[slot] = 0;
            slot += 1;
        }
    }
}

/// Central-difference estimate of `∂^k f / ∂z_{vars[0]}…∂z_{vars[k-1]}`,
/// variables indexed as `(x¹..xⁿ, y¹..yⁿ)`, refined by one Richardson step
/// (`h`, `h/2`); the tensor-product stencils have even-power error
/// expansions, so the result is fourth-order accurate.
pub fn fd_partial(field: &ScalarField, p: &ChartPoint, vars: &[usize], step: f64) -> Result<f64> {
    let nvars = 2 * p.dim();
    if vars.len() > 3 {
        return Err(FinslerError::Capability(format!(
            "finite differences support degree ≤ 3, got {}",
            vars.len()
        )));
    }
    if let Some(&v) = vars.iter().find(|&&v| v >= nvars) {
        return Err(FinslerError::InvalidInput(format!("variable index {v} out of range")));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(FinslerError::Numerical(format!("step must be positive, got {step}")));
    }
    let coords = p.coords();
    let mut counts = vec![0usize; nvars];
    for &v in vars {
        counts[v] += 1;
        if coords[v] + step == coords[v] {
            return Err(FinslerError::Numerical(format!(
                "step {step} underflows at coordinate value {}",
                coords[v]
            )));
        }
    }
    if vars.is_empty() {
        return Ok(field.value(p));
    }
    let coarse = central_difference(field, p, &counts, step);
    let fine = central_difference(field, p, &counts, step / 2.0);
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: &[f64], y: &[f64]) -> ChartPoint {
        ChartPoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn polynomial_jet_matches_hand_partials() {
        // f = x¹ (y²)²
        let f = ScalarField::new(|x, y| &x[0] * &(&y[1] * &y[1]));
        let j = jet_eval(&f, &pt(&[1.0, 0.0], &[0.0, 3.0]), 2).unwrap();
        assert_eq!(j.value(), 9.0);
        assert_eq!(j.partial(&[0]), 9.0);
        assert_eq!(j.partial(&[3]), 6.0);
        assert_eq!(j.partial(&[0, 3]), 6.0);
        assert_eq!(j.partial(&[3, 0]), 6.0);
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let f = ScalarField::constant(2.5);
        let j = jet_eval(&f, &pt(&[0.3, -0.2], &[1.0, 0.5]), 4).unwrap();
        assert_eq!(j.value(), 2.5);
        assert!(j.coeffs()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn order_above_maximum_is_a_capability_error() {
        let f = ScalarField::constant(1.0);
        let err = jet_eval(&f, &pt(&[0.0], &[1.0]), 5).unwrap_err();
        assert!(matches!(err, FinslerError::Capability(_)));
    }

    #[test]
    fn domain_violation_is_reported() {
        let f = ScalarField::constant(1.0).with_domain(|p| p.x[0] < 0.0);
        let err = jet_eval(&f, &pt(&[1.0], &[1.0]), 1).unwrap_err();
        assert!(matches!(err, FinslerError::Domain(_)));
    }

    #[test]
    fn fd_oracle_on_simple_monomials() {
        let f = ScalarField::new(|x, y| &x[0] * &y[0]);
        let d = fd_partial(&f, &pt(&[0.4], &[0.9]), &[0, 1], 1e-4).unwrap();
        assert!((d - 1.0).abs() < 1e-6);
        let g = ScalarField::new(|_, y| &y[0] * &y[0] * &y[0]);
        let d3 = fd_partial(&g, &pt(&[0.0], &[1.3]), &[1, 1, 1], 1e-3).unwrap();
        assert!((d3 - 6.0).abs() < 1e-3);
    }

    #[test]
    fn quartic_norm_gradient_matches_fd_oracle() {
        // ((y¹)⁴ + (y²)⁴)^{1/2} at y = (1,1); ∂/∂y¹ = 2 (y¹)³ / f = √2
        let f = ScalarField::new(|_, y| {
            let y1 = &y[0] * &y[0];
            let y2 = &y[1] * &y[1];
            (&y1 * &y1 + &y2 * &y2).sqrt()
        });
        let p = pt(&[0.0, 0.0], &[1.0, 1.0]);
        let ad = jet_eval(&f, &p, 1).unwrap().partial(&[2]);
        let fd = fd_partial(&f, &p, &[2], 1e-5).unwrap();
        assert!((ad - 2f64.sqrt()).abs() < 1e-12);
        assert!((ad - fd).abs() / ad.abs() < 1e-5);
    }

    #[test]
    fn fd_rejects_bad_steps() {
        let f = ScalarField::constant(1.0);
        let p = pt(&[1e20], &[1.0]);
        assert!(matches!(fd_partial(&f, &p, &[0], 1e-4), Err(FinslerError::Numerical(_))));
        assert!(matches!(fd_partial(&f, &p, &[1], 0.0), Err(FinslerError::Numerical(_))));
        assert!(fd_partial(&f, &p, &[1, 1, 1, 1], 1e-3).is_err());
    }
}
