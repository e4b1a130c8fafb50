//! JSON metric descriptions.
//!
//! ```json
//! {"family": "riemannian", "dim": 2,
//!  "a": [[[{"coef": 1.0, "pow": [0, 0]}], []],
//!        [[], [{"coef": 1.0, "pow": [0, 0]}, {"coef": 0.5, "pow": [2, 0]}]]]}
//! ```
//!
//! Families: `euclidean`, `minkowski_quartic` (`dim` only), `riemannian`
//! (`a`: `dim × dim` polynomials, symmetric), `randers` (`base`, `b`: `dim`
//! polynomials) and `conformal` (`base`, `sigma`: one polynomial). `base` is
//! either a nested description or a preset name. A polynomial is a list of
//! terms `{"coef": c, "pow": [k_1, …, k_n]}`; a bare number is a constant.

use std::path::Path;

use serde::Deserialize;

use crate::error::{FinslerError, Result};
use crate::jet::Jet;
use crate::metric::{
    self, conformal_change, randers_change, riemannian, CovectorField, FinslerStructure, MetricField,
    PositionFunction,
};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coef: f64,
    pub pow: Vec<u32>,
}

/// Polynomial in the position coordinates.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Polynomial {
    Constant(f64),
    Terms(Vec<Term>),
}

impl Polynomial {
    fn terms(&self, n: usize) -> Vec<Term> {
        match self {
            Polynomial::Constant(c) => vec![Term {
                coef: *c,
                pow: vec![0; n],
            }],
            Polynomial::Terms(t) => t.clone(),
        }
    }

    fn validate(&self, n: usize, what: &str) -> Result<()> {
        for t in self.terms(n) {
            if t.pow.len() != n {
                return Err(FinslerError::Config(format!(
                    "{what}: exponent list {:?} does not have length {n}",
                    t.pow
                )));
            }
            if !t.coef.is_finite() {
                return Err(FinslerError::Config(format!("{what}: non-finite coefficient")));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[Jet]) -> Jet {
        let mut acc = x[0].constant_like(0.0);
        for t in self.terms(x.len()) {
            let mut m = x[0].constant_like(t.coef);
            for (xi, &k) in x.iter().zip(&t.pow) {
                if k > 0 {
                    m = &m * &xi.powi(k as i32);
                }
            }
            acc += m;
        }
        acc
    }

    /// Canonical term list for comparisons: sorted by exponent, merged.
    fn canonical(&self, n: usize) -> Vec<(Vec<u32>, f64)> {
        let mut v: Vec<(Vec<u32>, f64)> = Vec::new();
        let mut terms = self.terms(n);
        terms.sort_by(|a, b| a.pow.cmp(&b.pow));
        for t in terms {
            match v.last_mut() {
                Some(last) if last.0 == t.pow => last.1 += t.coef,
                _ => v.push((t.pow, t.coef)),
            }
        }
        v.retain(|(_, c)| *c != 0.0);
        v
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BaseSpec {
    Preset(String),
    Inline(Box<MetricSpec>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub family: String,
    pub dim: usize,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub a: Option<Vec<Vec<Polynomial>>>,
    #[serde(default)]
    pub base: Option<BaseSpec>,
    #[serde(default)]
    pub b: Option<Vec<Polynomial>>,
    #[serde(default)]
    pub sigma: Option<Polynomial>,
}

fn unexpected(spec: &MetricSpec, allowed: &[&str]) -> Result<()> {
    let present = [
        ("a", spec.a.is_some()),
        ("base", spec.base.is_some()),
        ("b", spec.b.is_some()),
        ("sigma", spec.sigma.is_some()),
    ];
    for (k, p) in present {
        if p && !allowed.contains(&k) {
            return Err(FinslerError::Config(format!(
                "field `{k}` is not used by family `{}`",
                spec.family
            )));
        }
    }
    Ok(())
}

fn required<'a, T>(v: &'a Option<T>, field: &str, family: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| FinslerError::Config(format!("family `{family}` requires `{field}`")))
}

fn build_base(base: &BaseSpec, dim: usize) -> Result<FinslerStructure> {
    let s = match base {
        BaseSpec::Preset(name) => metric::by_name(name)
            .ok_or_else(|| FinslerError::Config(format!("unknown preset `{name}`")))?,
        BaseSpec::Inline(spec) => build(spec)?,
    };
    if s.dim() != dim {
        return Err(FinslerError::Config(format!(
            "base has dimension {}, expected {dim}",
            s.dim()
        )));
    }
    Ok(s)
}

/// Builds the structure described by a parsed specification.
pub fn build(spec: &MetricSpec) -> Result<FinslerStructure> {
    let n = spec.dim;
    if n == 0 {
        return Err(FinslerError::Config("dim must be at least 1".into()));
    }
    let fam = spec.family.as_str();
    let s = match fam {
        "euclidean" => {
            unexpected(spec, &[])?;
            metric::euclidean(n)
        }
        "minkowski_quartic" => {
            unexpected(spec, &[])?;
            metric::minkowski_quartic(n)
        }
        "riemannian" => {
            unexpected(spec, &["a"])?;
            let a = required(&spec.a, "a", fam)?.clone();
            if a.len() != n || a.iter().any(|r| r.len() != n) {
                return Err(FinslerError::Config(format!("`a` must be {n} × {n}")));
            }
            for i in 0..n {
                for j in 0..n {
                    a[i][j].validate(n, &format!("a[{i}][{j}]"))?;
                    if a[i][j].canonical(n) != a[j][i].canonical(n) {
                        return Err(FinslerError::Config(format!("`a` is not symmetric at ({i}, {j})")));
                    }
                }
            }
            let field = MetricField::new(move |x| {
                a.iter().map(|row| row.iter().map(|p| p.eval(x)).collect()).collect()
            });
            riemannian("riemannian", n, field)
        }
        "randers" => {
            unexpected(spec, &["base", "b"])?;
            let base = build_base(required(&spec.base, "base", fam)?, n)?;
            let b = required(&spec.b, "b", fam)?.clone();
            if b.len() != n {
                return Err(FinslerError::Config(format!("`b` must have {n} components")));
            }
            for (i, p) in b.iter().enumerate() {
                p.validate(n, &format!("b[{i}]"))?;
            }
            randers_change(&base, CovectorField::new(move |x| b.iter().map(|p| p.eval(x)).collect()))
        }
        "conformal" => {
            unexpected(spec, &["base", "sigma"])?;
            let base = build_base(required(&spec.base, "base", fam)?, n)?;
            let sigma = required(&spec.sigma, "sigma", fam)?.clone();
            sigma.validate(n, "sigma")?;
            conformal_change(&base, PositionFunction::new(move |x| sigma.eval(x)))
        }
        other => {
            return Err(FinslerError::Config(format!(
                "unknown family `{other}` (expected euclidean, minkowski_quartic, riemannian, randers or conformal)"
            )))
        }
    };
    Ok(match &spec.name {
        Some(name) => s.renamed(name.clone()),
        None => s,
    })
}

/// Parses a JSON description; a bare JSON string is read as a preset name.
pub fn parse_metric(text: &str) -> Result<FinslerStructure> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| FinslerError::Config(format!("invalid JSON: {e}")))?;
    if let serde_json::Value::String(name) = &value {
        return metric::by_name(name).ok_or_else(|| FinslerError::Config(format!("unknown preset `{name}`")));
    }
    let spec: MetricSpec =
        serde_json::from_value(value).map_err(|e| FinslerError::Config(format!("invalid metric description: {e}")))?;
    build(&spec)
}

/// Resolves a `--metric` argument: a preset name, else a path to a JSON file.
pub fn load_metric(arg: &str) -> Result<FinslerStructure> {
    if let Some(s) = metric::by_name(arg) {
        return Ok(s);
    }
    let path = Path::new(arg);
    if !path.is_file() {
        return Err(FinslerError::Config(format!(
            "`{arg}` is neither a preset ({}) nor a readable file",
            metric::PRESET_NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| FinslerError::Config(format!("{arg}: {e}")))?;
    parse_metric(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::metric_tensor;
    use crate::point::ChartPoint;

    #[test]
    fn riemannian_polynomial_metric() {
        let s = parse_metric(
            r#"{"family": "riemannian", "dim": 2,
                "a": [[1, []], [[], [{"coef": 1.0, "pow": [0, 0]}, {"coef": 0.5, "pow": [2, 0]}]]]}"#,
        )
        .unwrap();
        let p = ChartPoint::new(vec![2.0, 0.3], vec![1.0, 1.0]).unwrap();
        let g = metric_tensor(&s, &p).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((g[(1, 1)] - 3.0).abs() < 1e-14);
        assert!(g[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn nested_and_preset_bases() {
        let r = parse_metric(r#"{"family": "randers", "dim": 2, "base": "sphere2", "b": [0.1, [{"coef": 0.2, "pow": [1, 0]}]]}"#)
            .unwrap();
        assert_eq!(r.dim(), 2);
        let c = parse_metric(
            r#"{"family": "conformal", "dim": 2, "name": "c", "base": {"family": "minkowski_quartic", "dim": 2},
                "sigma": [{"coef": 0.3, "pow": [1, 0]}]}"#,
        )
        .unwrap();
        assert_eq!(c.name(), "c");
        assert_eq!(parse_metric(r#""quartic3""#).unwrap().dim(), 3);
    }

    #[test]
    fn bad_descriptions_are_config_errors() {
        for text in [
            "{",
            r#"{"family": "spherical", "dim": 2}"#,
            r#"{"family": "euclidean", "dim": 0}"#,
            r#"{"family": "euclidean", "dim": 2, "sigma": 1}"#,
            r#"{"family": "riemannian", "dim": 2, "a": [[1, 0.5], [0, 1]]}"#,
            r#"{"family": "riemannian", "dim": 2, "a": [[1, 0], [0, [{"coef": 1, "pow": [1]}]]]}"#,
            r#"{"family": "randers", "dim": 3, "base": "sphere2", "b": [0, 0, 0]}"#,
            r#"{"family": "conformal", "dim": 2, "base": "euclidean2"}"#,
            r#"{"family": "euclidean", "dim": 2, "colour": 1}"#,
        ] {
            assert!(matches!(parse_metric(text), Err(FinslerError::Config(_))), "{text}");
        }
        assert!(matches!(load_metric("/nonexistent/metric.json"), Err(FinslerError::Config(_))));
    }
}
