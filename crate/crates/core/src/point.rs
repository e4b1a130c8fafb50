//! Points of the slit tangent bundle and deterministic sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::fmt;

use crate::error::{FinslerError, Result};

/// A point `(x, y)` of the slit tangent bundle in one chart, `y ≠ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ChartPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(FinslerError::Domain(format!(
                "position and direction must have the same positive length (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(FinslerError::Domain("non-finite coordinate".into()));
        }
        if y.iter().all(|&v| v == 0.0) {
            return Err(FinslerError::Domain("direction y must be nonzero".into()));
        }
        Ok(Self { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn y_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Same position, direction scaled by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.iter().map(|v| v * lambda).collect(),
        }
    }

    /// Coordinates `(x¹..xⁿ, y¹..yⁿ)` in jet-variable order.
    pub fn coords(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    /// Parses `"x=1,0;y=0,3"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut x = None;
        let mut y = None;
        for part in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, vals) = part
                .split_once('=')
                .ok_or_else(|| FinslerError::InvalidInput(format!("expected key=values in '{part}'")))?;
            let vals: Vec<f64> = vals
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| FinslerError::InvalidInput(format!("bad number '{v}': {e}")))
                })
                .collect::<Result<_>>()?;
            match key.trim() {
                "x" => x = Some(vals),
                "y" => y = Some(vals),
                other => return Err(FinslerError::InvalidInput(format!("unknown key '{other}'"))),
            }
        }
        match (x, y) {
            (Some(x), Some(y)) => Self::new(x, y),
            _ => Err(FinslerError::InvalidInput("point needs both x= and y=".into())),
        }
    }
}

impl fmt::Display for ChartPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x={:?};y={:?}", self.x, self.y)
    }
}

/// Axis-aligned position box plus a window on `|y|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub y_min: f64,
    pub y_max: f64,
}

impl SampleDomain {
    pub fn unit_box(n: usize) -> Self {
        Self::cube(n, 1.0)
    }

    /// `[-half, half]^n` with the default `|y| ∈ [0.5, 2]` window.
    pub fn cube(n: usize, half: f64) -> Self {
        Self {
            lo: vec![-half; n],
            hi: vec![half; n],
            y_min: 0.5,
            y_max: 2.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(FinslerError::Domain("empty sampling domain".into()));
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(a <= b)) {
            return Err(FinslerError::Domain("empty position box".into()));
        }
        if !(self.y_min > 0.0 && self.y_min <= self.y_max) {
            return Err(FinslerError::Domain("empty |y| window".into()));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> ChartPoint {
        let n = self.dim();
        let x = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| if a == b { a } else { rng.gen_range(a..b) })
            .collect();
        let mut dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let radius = if self.y_min == self.y_max {
            self.y_min
        } else {
            rng.gen_range(self.y_min..self.y_max)
        };
        dir.iter_mut().for_each(|v| *v *= radius / norm);
        ChartPoint { x, y: dir }
    }
}

/// Deterministic pseudo-random points with `|y|` inside the domain's window.
pub fn sample_points(domain: &SampleDomain, count: usize, seed: u64) -> Result<Vec<ChartPoint>> {
    sample_points_where(domain, count, seed, |_| true)
}

/// As [`sample_points`], rejecting points that fail `accept`.
pub fn sample_points_where<P>(domain: &SampleDomain, count: usize, seed: u64, accept: P) -> Result<Vec<ChartPoint>>
where
    P: Fn(&ChartPoint) -> bool,
{
    if count == 0 {
        return Err(FinslerError::Domain("sample count must be at least 1".into()));
    }
    domain.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let budget = 1000 * count;
    let mut tries = 0;
    while out.len() < count {
        if tries == budget {
            return Err(FinslerError::Domain(format!(
                "no admissible points after {budget} draws"
            )));
        }
        tries += 1;
        let p = domain.draw(&mut rng);
        if accept(&p) {
            out.push(p);
        }
    }
    Ok(out)
}
