//! Synthetic boundary-regression data: designs, frontiers and one-sided errors.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, in_unit_cube, Error, Result};
use crate::estimator::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignKind {
    /// iid uniform points on `[0,1]^q`.
    RandomUniform,
    /// Lattice `{(i_1/m, ..., i_q/m) : i_r = 1..m}` with `m = n^{1/q}`.
    EquidistantGrid,
    /// Caller-supplied fixed points.
    CustomFixed { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub dim: usize,
    pub n: usize,
}

impl DesignSpec {
    pub fn new(kind: DesignKind, dim: usize, n: usize) -> Self {
        DesignSpec { kind, dim, n }
    }
}

/// Integer `m` with `m^q = n`, if any.
pub fn grid_side(n: usize, dim: usize) -> Option<usize> {
    let m = (n as f64).powf(1.0 / dim as f64).round() as usize;
    (m.checked_pow(dim as u32) == Some(n)).then_some(m)
}

pub fn gen_design<R: Rng + ?Sized>(spec: &DesignSpec, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if spec.dim == 0 || spec.n == 0 {
        return Err(Error::InvalidParameter(format!(
            "design needs dim >= 1 and n >= 1 (dim = {}, n = {})",
            spec.dim, spec.n
        )));
    }
    match &spec.kind {
        DesignKind::RandomUniform => Ok((0..spec.n)
            .map(|_| (0..spec.dim).map(|_| rng.gen::<f64>()).collect())
            .collect()),
        DesignKind::EquidistantGrid => {
            let m = grid_side(spec.n, spec.dim).ok_or_else(|| {
                Error::InvalidParameter(format!("n = {} is not a perfect {}-th power", spec.n, spec.dim))
            })?;
            // First coordinate varies fastest.
            Ok((0..spec.n)
                .map(|mut idx| {
                    (0..spec.dim)
                        .map(|_| {
                            let i = idx % m;
                            idx /= m;
                            (i + 1) as f64 / m as f64
                        })
                        .collect()
                })
                .collect())
        }
        DesignKind::CustomFixed { points } => {
            if points.len() != spec.n {
                return Err(Error::LengthMismatch {
                    what: "custom design",
                    expected: spec.n,
                    got: points.len(),
                });
            }
            for p in points {
                check_dim(spec.dim, p.len())?;
                if !in_unit_cube(p) {
                    return Err(Error::OutsideUnitCube(p.clone()));
                }
            }
            Ok(points.clone())
        }
    }
}

/// One-sided error laws; samples are always `≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorSpec {
    /// `ε = -E`, `E ~ Exp(1)`.
    ExponentialUnit,
    /// `ε = -W` with `P(W > z) = exp(-z^α)`.
    Weibull { alpha: f64 },
    /// Noiseless responses, for exact-recovery checks.
    Zero,
}

impl ErrorSpec {
    /// Tail index of `|ε|` at zero, `P(|ε| ≤ z) ~ z^α`.
    pub fn tail_index(&self) -> Option<f64> {
        match self {
            ErrorSpec::ExponentialUnit => Some(1.0),
            ErrorSpec::Weibull { alpha } => Some(*alpha),
            ErrorSpec::Zero => None,
        }
    }

    /// `P(ε ≤ y)` for `y ≤ 0`.
    pub fn cdf(&self, y: f64) -> f64 {
        if y >= 0.0 {
            return 1.0;
        }
        let z = -y;
        match self {
            ErrorSpec::ExponentialUnit => (-z).exp(),
            ErrorSpec::Weibull { alpha } => (-z.powf(*alpha)).exp(),
            ErrorSpec::Zero => 0.0,
        }
    }

    /// `P(ε > y) = 1 - F(y)` for `y < 0`; behaves like `|y|^α` near zero.
    pub fn survival(&self, y: f64) -> f64 {
        let z = (-y).max(0.0);
        match self {
            ErrorSpec::ExponentialUnit => -(-z).exp_m1(),
            ErrorSpec::Weibull { alpha } => -(-z.powf(*alpha)).exp_m1(),
            ErrorSpec::Zero => 1.0,
        }
    }
}

pub fn sample_errors<R: Rng + ?Sized>(spec: &ErrorSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let alpha = match *spec {
        ErrorSpec::Zero => return Ok(vec![0.0; n]),
        ErrorSpec::ExponentialUnit => 1.0,
        ErrorSpec::Weibull { alpha } => {
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(Error::InvalidParameter(format!("Weibull shape must be positive, got {alpha}")));
            }
            alpha
        }
    };
    Ok((0..n)
        .map(|_| {
            // 1 - U lies in (0, 1], so the log is finite.
            let e = -(1.0 - rng.gen::<f64>()).ln();
            -e.powf(1.0 / alpha)
        })
        .collect())
}

pub type BoundaryFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The true frontier `g`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `0.5 sin(2π Σ x_r) + 4 Σ x_r`.
    SineSum,
    /// `(x - 0.5)^3 + 2`, one-dimensional.
    #[serde(rename = "cubic_1d")]
    Cubic1d,
    Constant { value: f64 },
    #[serde(skip)]
    Custom(BoundaryFn),
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::SineSum => write!(f, "SineSum"),
            ModelSpec::Cubic1d => write!(f, "Cubic1d"),
            ModelSpec::Constant { value } => write!(f, "Constant({value})"),
            ModelSpec::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl ModelSpec {
    pub fn custom<F>(g: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ModelSpec::Custom(Arc::new(g))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if !in_unit_cube(x) {
            return Err(Error::OutsideUnitCube(x.to_vec()));
        }
        Ok(match self {
            ModelSpec::SineSum => {
                let s: f64 = x.iter().sum();
                0.5 * (2.0 * PI * s).sin() + 4.0 * s
            }
            ModelSpec::Cubic1d => {
                check_dim(1, x.len())?;
                (x[0] - 0.5).powi(3) + 2.0
            }
            ModelSpec::Constant { value } => *value,
            ModelSpec::Custom(g) => g(x),
        })
    }
}

pub fn eval_boundary(spec: &ModelSpec, x: &[f64]) -> Result<f64> {
    spec.eval(x)
}

/// `Y_i = g(X_i) + ε_i`.
pub fn make_sample(design: &[Vec<f64>], model: &ModelSpec, errors: &[f64]) -> Result<Dataset> {
    if design.len() != errors.len() {
        return Err(Error::LengthMismatch {
            what: "error vector",
            expected: design.len(),
            got: errors.len(),
        });
    }
    if let Some(e) = errors.iter().find(|&&e| e > 0.0) {
        return Err(Error::InvalidParameter(format!("errors must be nonpositive, got {e}")));
    }
    let responses = design
        .iter()
        .zip(errors)
        .map(|(x, e)| Ok(model.eval(x)? + e))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(design.to_vec(), responses)
}

/// Smallest number of points found in an axis-aligned cube of edge `d·h`,
/// over the family of cubes whose lower corners lie on a lattice of pitch
/// `d·h/2` (plus the flush position `1 - d·h` on every axis).
pub fn verify_design_density(points: &[Vec<f64>], h: f64, d: f64) -> Result<usize> {
    let edge = d * h;
    if !(edge > 0.0) || edge > 1.0 + 1e-12 || !edge.is_finite() {
        return Err(Error::InvalidParameter(format!("cube edge d*h = {edge} must lie in (0, 1]")));
    }
    let edge = edge.min(1.0);
    let dim = match points.first() {
        Some(p) => p.len(),
        None => return Ok(0),
    };
    for p in points {
        check_dim(dim, p.len())?;
        if !in_unit_cube(p) {
            return Err(Error::OutsideUnitCube(p.clone()));
        }
    }

    let pitch = edge / 2.0;
    let mut starts = Vec::new();
    let mut s = 0.0;
    while s + edge < 1.0 - 1e-12 {
        starts.push(s);
        s += pitch;
    }
    starts.push(1.0 - edge);

    let eps = 1e-12;
    let mut min_count = usize::MAX;
    let mut corner = vec![0usize; dim];
    loop {
        let count = points
            .iter()
            .filter(|p| {
                p.iter().zip(&corner).all(|(&c, &k)| {
                    let lo = starts[k];
                    c >= lo - eps && c <= lo + edge + eps
                })
            })
            .count();
        min_count = min_count.min(count);

        // odometer over lattice corners
        let mut r = 0;
        loop {
            if r == dim {
                return Ok(min_count);
            }
            corner[r] += 1;
            if corner[r] < starts.len() {
                break;
            }
            corner[r] = 0;
            r += 1;
        }
    }
}
