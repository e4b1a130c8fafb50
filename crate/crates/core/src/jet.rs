//! Truncated multivariate Taylor arithmetic ("jets").
//!
//! A [`Jet`] of order `k` over `m` variables stores every partial derivative
//! `∂^α f` with `|α| ≤ k` at one point. Coefficients are raw partial values,
//! not Taylor-normalized, so `jet.partial(&[a, b])` is literally `∂²f/∂a∂b`.
//!
//! Products use the multivariate Leibniz rule with precomputed multinomial
//! weights; elementary functions are applied by univariate Taylor composition
//! on the nilpotent part. Everything is exact up to floating round-off.
//!
//! Monomials are stored in graded order, so the coefficients of a lower-order
//! space are a prefix of the higher-order one and truncation is a slice.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

/// Deepest derivative order the crate supports.
pub const MAX_ORDER: usize = 4;

/// Exponent vector over the jet variables.
pub type MultiIndex = Vec<u8>;

/// Monomial tables shared by all jets of one `(nvars, order)` shape.
pub struct JetSpace {
    nvars: usize,
    order: usize,
    monomials: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    // (out, lhs, rhs, multinomial weight)
    products: Vec<(u32, u32, u32, f64)>,
    // shift[v][i]: index in this space of lower.monomials[i] + e_v
    shift: Vec<Vec<usize>>,
    lower: Option<Arc<JetSpace>>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("len", &self.monomials.len())
            .finish()
    }
}

fn binomial(n: u8, k: u8) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc
}

fn monomials_of_degree(nvars: usize, degree: u8) -> Vec<MultiIndex> {
    if nvars == 0 {
        return if degree == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for head in (0..=degree).rev() {
        for tail in monomials_of_degree(nvars - 1, degree - head) {
            let mut m = Vec::with_capacity(nvars);
            m.push(head);
            m.extend(tail);
            out.push(m);
        }
    }
    out
}

impl JetSpace {
    /// Builds the space and the chain of lower-order spaces beneath it.
    pub fn new(nvars: usize, order: usize) -> Arc<Self> {
        let lower = if order == 0 {
            None
        } else {
            Some(Self::new(nvars, order - 1))
        };
        let mut monomials = Vec::new();
        for d in 0..=order {
            monomials.extend(monomials_of_degree(nvars, d as u8));
        }
        let lookup: HashMap<MultiIndex, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();

        let mut products = Vec::new();
        for (ia, a) in monomials.iter().enumerate() {
            let da: usize = a.iter().map(|&e| e as usize).sum();
            for (ib, b) in monomials.iter().enumerate() {
                let db: usize = b.iter().map(|&e| e as usize).sum();
                if da + db > order {
                    continue;
                }
                let sum: MultiIndex = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let weight: f64 = sum.iter().zip(a).map(|(&s, &k)| binomial(s, k)).product();
                products.push((lookup[&sum] as u32, ia as u32, ib as u32, weight));
            }
        }

        let shift = match &lower {
            None => vec![Vec::new(); nvars],
            Some(low) => (0..nvars)
                .map(|v| {
                    low.monomials
                        .iter()
                        .map(|m| {
                            let mut up = m.clone();
                            up[v] += 1;
                            lookup[&up]
                        })
                        .collect()
                })
                .collect(),
        };

        Arc::new(Self {
            nvars,
            order,
            monomials,
            lookup,
            products,
            shift,
            lower,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    pub fn index_of(&self, alpha: &[u8]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Space of the given (not larger) order in the same variables.
    pub fn at_order(self: &Arc<Self>, order: usize) -> Arc<Self> {
        assert!(order <= self.order, "cannot raise jet order");
        let mut s = Arc::clone(self);
        while s.order > order {
            s = Arc::clone(s.lower.as_ref().expect("lower space"));
        }
        s
    }

    pub fn constant(self: &Arc<Self>, value: f64) -> Jet {
        let mut coeffs = vec![0.0; self.len()];
        coeffs[0] = value;
        Jet {
            space: Arc::clone(self),
            coeffs,
        }
    }

    /// The jet of the coordinate function `z_var` at the value `value`.
    pub fn variable(self: &Arc<Self>, var: usize, value: f64) -> Jet {
        assert!(var < self.nvars);
        let mut jet = self.constant(value);
        if self.order >= 1 {
            jet.coeffs[1 + var] = 1.0;
        }
        jet
    }
}

/// Value and raw partial derivatives of a scalar field at one point.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.space.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Coefficient for an exponent vector; `None` if its degree exceeds the order.
    pub fn coeff(&self, alpha: &[u8]) -> Option<f64> {
        self.space.index_of(alpha).map(|i| self.coeffs[i])
    }

    /// `∂^k f / ∂z_{vars[0]} … ∂z_{vars[k-1]}`; the order of `vars` is irrelevant.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        let mut alpha = vec![0u8; self.space.nvars];
        for &v in vars {
            alpha[v] += 1;
        }
        self.coeff(&alpha)
            .unwrap_or_else(|| panic!("partial of degree {} exceeds jet order {}", vars.len(), self.order()))
    }

    pub fn constant_like(&self, value: f64) -> Jet {
        self.space.constant(value)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let space = self.space.at_order(order);
        let coeffs = self.coeffs[..space.len()].to_vec();
        Jet { space, coeffs }
    }

    /// `∂f/∂z_var`, one order lower.
    pub fn derivative(&self, var: usize) -> Jet {
        let lower = self
            .space
            .lower
            .as_ref()
            .expect("cannot differentiate an order-0 jet");
        let coeffs = self.space.shift[var].iter().map(|&i| self.coeffs[i]).collect();
        Jet {
            space: Arc::clone(lower),
            coeffs,
        }
    }

    fn aligned(&self, other: &Jet) -> (Jet, Jet) {
        assert_eq!(self.nvars(), other.nvars(), "jets over different variables");
        let order = self.order().min(other.order());
        (self.truncate(order), other.truncate(order))
    }

    fn mul_same(&self, other: &Jet) -> Jet {
        let mut out = vec![0.0; self.coeffs.len()];
        for &(o, a, b, w) in &self.space.products {
            out[o as usize] += w * self.coeffs[a as usize] * other.coeffs[b as usize];
        }
        Jet {
            space: Arc::clone(&self.space),
            coeffs: out,
        }
    }

    /// Applies a univariate function given its derivatives `d[k] = φ^(k)(f(p))`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.order();
        assert!(derivs.len() > order, "need {} derivatives", order + 1);
        let mut nil = self.clone();
        nil.coeffs[0] = 0.0;
        let mut out = self.constant_like(derivs[0]);
        let mut power = self.constant_like(1.0);
        let mut factorial = 1.0;
        for (k, d) in derivs.iter().enumerate().take(order + 1).skip(1) {
            power = power.mul_same(&nil);
            factorial *= k as f64;
            let scale = d / factorial;
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += scale * p;
            }
        }
        out
    }

    pub fn powf(&self, r: f64) -> Jet {
        let a = self.value();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut falling = 1.0;
        for k in 0..=self.order() {
            derivs.push(falling * a.powf(r - k as f64));
            falling *= r - k as f64;
        }
        self.compose(&derivs)
    }

    pub fn powi(&self, r: i32) -> Jet {
        let a = self.value();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut falling = 1.0;
        for k in 0..=self.order() {
            let e = r - k as i32;
            derivs.push(if falling == 0.0 { 0.0 } else { falling * a.powi(e) });
            falling *= f64::from(e);
        }
        self.compose(&derivs)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Jet {
        self.powi(-1)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let mut derivs = vec![a.ln()];
        let mut fact = 1.0;
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            derivs.push(sign * fact / a.powi(k as i32));
            fact *= k as f64;
        }
        self.compose(&derivs)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        self.compose(&(0..=self.order()).map(|k| cycle[k % 4]).collect::<Vec<_>>())
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        self.compose(&(0..=self.order()).map(|k| cycle[k % 4]).collect::<Vec<_>>())
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let (mut a, b) = self.aligned(rhs);
        a.coeffs.iter_mut().zip(&b.coeffs).for_each(|(x, y)| *x += y);
        a
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let (mut a, b) = self.aligned(rhs);
        a.coeffs.iter_mut().zip(&b.coeffs).for_each(|(x, y)| *x -= y);
        a
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let (a, b) = self.aligned(rhs);
        a.mul_same(&b)
    }
}

impl<'a> Div<&'a Jet> for &'a Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &Jet) -> Jet {
        self * &rhs.recip()
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! owned_binops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $f(self, rhs: Jet) -> Jet { $tr::$f(&self, &rhs) }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $f(self, rhs: &Jet) -> Jet { $tr::$f(&self, rhs) }
        }
        impl<'a> $tr<Jet> for &'a Jet {
            type Output = Jet;
            fn $f(self, rhs: Jet) -> Jet { $tr::$f(self, &rhs) }
        }
    )*};
}
owned_binops!(Add add, Sub sub, Mul mul, Div div);

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self + (-rhs)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Div<f64> for &Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $f(self, rhs: f64) -> Jet { $tr::$f(&self, rhs) }
        }
    )*};
}
scalar_ops!(Add add, Sub sub, Mul mul, Div div);

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &rhs + self
    }
}

impl Add<&Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &(-rhs) + self
    }
}

impl Sub<&Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        &(-rhs) + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        rhs.recip().scale(self)
    }
}

impl Div<&Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        rhs.recip().scale(self)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = &*self + rhs;
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        *self = &*self - rhs;
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = &*self - &rhs;
    }
}

/// Sum of a non-empty iterator of jets.
pub fn sum<I: IntoIterator<Item = Jet>>(iter: I) -> Jet {
    let mut it = iter.into_iter();
    let first = it.next().expect("sum of empty jet sequence");
    it.fold(first, |acc, j| acc + j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_layout_puts_first_derivatives_after_value() {
        let s = JetSpace::new(3, 2);
        assert_eq!(s.monomials()[0], vec![0, 0, 0]);
        assert_eq!(s.monomials()[1], vec![1, 0, 0]);
        assert_eq!(s.monomials()[2], vec![0, 1, 0]);
        assert_eq!(s.monomials()[3], vec![0, 0, 1]);
        assert_eq!(s.len(), 10);
        assert_eq!(JetSpace::new(6, 4).len(), 210);
    }

    #[test]
    fn product_rule_on_monomials() {
        let s = JetSpace::new(2, 4);
        let a = s.variable(0, 1.5);
        let b = s.variable(1, -0.5);
        // f = a^2 b^2
        let f = &(&a * &a) * &(&b * &b);
        assert!((f.value() - 2.25 * 0.25).abs() < 1e-15);
        assert!((f.partial(&[0]) - 2.0 * 1.5 * 0.25).abs() < 1e-14);
        assert!((f.partial(&[0, 1]) - 4.0 * 1.5 * -0.5).abs() < 1e-14);
        assert!((f.partial(&[0, 0, 1, 1]) - 4.0).abs() < 1e-14);
        assert!((f.partial(&[1, 0, 1, 0]) - 4.0).abs() < 1e-14);
        assert_eq!(f.partial(&[0, 0, 0, 1]), 0.0);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let s = JetSpace::new(1, 4);
        let t = s.variable(0, 0.7);
        let e = t.exp();
        for k in 0..=4 {
            assert!((e.partial(&vec![0; k]) - 0.7f64.exp()).abs() < 1e-14);
        }
        let l = t.ln();
        assert!((l.partial(&[0, 0, 0]) - 2.0 / 0.7f64.powi(3)).abs() < 1e-12);
        let r = t.sqrt();
        assert!((r.partial(&[0, 0]) + 0.25 * 0.7f64.powf(-1.5)).abs() < 1e-14);
        let sn = t.sin();
        assert!((sn.partial(&[0, 0, 0]) + 0.7f64.cos()).abs() < 1e-14);
        let c = t.cos();
        assert!((c.partial(&[0, 0, 0, 0]) - 0.7f64.cos()).abs() < 1e-14);
        let q = &t / &(&t * &t + 1.0);
        // d/dt t/(1+t^2) = (1 - t^2)/(1+t^2)^2
        let expect = (1.0 - 0.49) / (1.49f64 * 1.49);
        assert!((q.partial(&[0]) - expect).abs() < 1e-14);
    }

    #[test]
    fn derivative_and_truncate_are_consistent() {
        let s = JetSpace::new(2, 3);
        let x = s.variable(0, 0.3);
        let y = s.variable(1, 1.1);
        let f = (&x * &y).sin() + &y * &y * &y;
        let fx = f.derivative(0);
        assert_eq!(fx.order(), 2);
        assert_eq!(fx.partial(&[1, 1]), f.partial(&[0, 1, 1]));
        let t = f.truncate(1);
        assert_eq!(t.coeffs(), &f.coeffs()[..3]);
    }

    #[test]
    fn mixed_orders_align_down() {
        let s = JetSpace::new(2, 3);
        let a = s.variable(0, 2.0);
        let b = a.truncate(1);
        assert_eq!((&a * &b).order(), 1);
        assert_eq!((&a + &b).order(), 1);
    }
}
