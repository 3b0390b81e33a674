//! Max-norm windows clipped to the unit cube.

use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, MultiIndex};
use crate::error::{check_dim, in_unit_cube, Error, Result};

/// The box `{t : ‖t - x‖_∞ ≤ h} ∩ [0,1]^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    center: Vec<f64>,
    bandwidth: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    // Offsets `a - x` and `b - x`; exactly `∓h` on unclipped axes so that
    // odd moments of symmetric windows vanish exactly.
    lower_offset: Vec<f64>,
    upper_offset: Vec<f64>,
}

impl Window {
    pub fn clip(x: &[f64], h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive and finite, got {h}")));
        }
        if x.is_empty() {
            return Err(Error::InvalidParameter("window center has dimension 0".into()));
        }
        if !in_unit_cube(x) {
            return Err(Error::OutsideUnitCube(x.to_vec()));
        }
        let lower_offset: Vec<f64> = x.iter().map(|&c| if c - h >= 0.0 { -h } else { -c }).collect();
        let upper_offset: Vec<f64> = x.iter().map(|&c| if c + h <= 1.0 { h } else { 1.0 - c }).collect();
        Ok(Window {
            center: x.to_vec(),
            bandwidth: h,
            lower: x.iter().map(|&c| (c - h).max(0.0)).collect(),
            upper: x.iter().map(|&c| (c + h).min(1.0)).collect(),
            lower_offset,
            upper_offset,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower_offset
            .iter()
            .zip(&self.upper_offset)
            .map(|(a, b)| b - a)
            .product()
    }

    /// Closed-boundary membership: `‖t - x‖_∞ ≤ h` and `t ∈ [0,1]^q`.
    pub fn contains(&self, t: &[f64]) -> Result<bool> {
        check_dim(self.dim(), t.len())?;
        Ok(self.contains_unchecked(t))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, t: &[f64]) -> bool {
        t.iter()
            .zip(&self.center)
            .all(|(&tr, &xr)| (0.0..=1.0).contains(&tr) && (tr - xr).abs() <= self.bandwidth)
    }

    /// `∫_window (t - x)^j dt`, as a product of one-dimensional integrals.
    pub fn monomial_integral(&self, j: &MultiIndex) -> Result<f64> {
        check_dim(self.dim(), j.dim())?;
        Ok(self.integral_unchecked(j.exponents()))
    }

    fn integral_unchecked(&self, exps: &[u32]) -> f64 {
        exps.iter()
            .enumerate()
            .map(|(r, &e)| {
                let k = e as i32 + 1;
                let hi = self.upper_offset[r].powi(k);
                let lo = self.lower_offset[r].powi(k);
                (hi - lo) / k as f64
            })
            .product()
    }

    /// LP objective: integrals of every basis monomial over the window.
    pub fn objective_vector(&self, basis: &BasisSpec) -> Result<Vec<f64>> {
        check_dim(self.dim(), basis.dim())?;
        Ok(basis
            .indices()
            .iter()
            .map(|j| self.integral_unchecked(j.exponents()))
            .collect())
    }
}

pub fn clip_window(x: &[f64], h: f64) -> Result<Window> {
    Window::clip(x, h)
}
