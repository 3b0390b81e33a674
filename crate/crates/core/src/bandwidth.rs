//! Bandwidth rules and Lepski-type adaptive selection.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{fit_grid_serial, fit_local_constant, Dataset, EmptyWindowPolicy, EstimatorConfig, FallbackPolicy};

/// `n^{-1/(β*+1+q)}`, capped at 1.
pub fn simulation_bandwidth(n: usize, dim: usize, beta_star: u32) -> f64 {
    let n = n.max(1) as f64;
    n.powf(-1.0 / (beta_star as f64 + 1.0 + dim as f64)).min(1.0)
}

/// `(ln n / n)^{1/(αβ+q)}`, capped at 1. Balances the `h^β` smoothing bias
/// against the `(ln n / (n h^q))^{1/α}` extreme-value error.
pub fn balanced_bandwidth(n: usize, dim: usize, alpha: f64, beta: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("balanced bandwidth needs n >= 3, got {n}")));
    }
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tail index and smoothness must be positive (alpha = {alpha}, beta = {beta})"
        )));
    }
    let n = n as f64;
    Ok((n.ln() / n).powf(1.0 / (alpha * beta + dim as f64)).min(1.0))
}

/// Hill estimator of the tail index at the upper endpoint zero.
///
/// With `z_(1) ≤ ... ≤ z_(k+1)` the `k + 1` smallest values of `|r_i|`,
/// returns `k / Σ_{i ≤ k} ln(z_(k+1) / z_(i))`. This is the classical Hill
/// estimator applied to `1 / |r_i|`, whose upper tail has index `α` when
/// `P(|r| ≤ z) ~ c z^α`.
pub fn hill_tail_index(residuals: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("Hill estimator needs k >= 1".into()));
    }
    if let Some(r) = residuals.iter().find(|r| !(**r <= 0.0)) {
        return Err(Error::InvalidParameter(format!("residuals must be nonpositive, got {r}")));
    }
    if residuals.len() < k + 1 {
        return Err(Error::InsufficientData {
            needed: k + 1,
            have: residuals.len(),
        });
    }
    let mut z: Vec<f64> = residuals.iter().map(|r| -r).collect();
    z.select_nth_unstable_by(k, f64::total_cmp);
    let pivot = z[k];
    let lower = &z[..k];
    if lower.contains(&0.0) || pivot == 0.0 {
        return Err(Error::DegenerateTail("zero residuals among the order statistics".into()));
    }
    let sum: f64 = lower.iter().map(|&v| (pivot / v).ln()).sum();
    if !(sum > 0.0) {
        return Err(Error::DegenerateTail("all order statistics coincide".into()));
    }
    Ok(k as f64 / sum)
}

pub type ThresholdFn = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// Critical values `ζ̂_k` of the selection rule.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `C · (ln n / (n h_k^q))^{1/α̂}` with `α̂` from a Hill estimate on
    /// local-constant pilot residuals.
    Default { constant: f64 },
    /// The same value for every step (0 and +∞ included).
    Fixed { value: f64 },
    /// `(k, h_k) ↦ ζ̂_k`.
    #[serde(skip)]
    Custom(ThresholdFn),
}

impl fmt::Debug for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdRule::Default { constant } => write!(f, "Default {{ constant: {constant} }}"),
            ThresholdRule::Fixed { value } => write!(f, "Fixed {{ value: {value} }}"),
            ThresholdRule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub s: f64,
    pub rho: f64,
    pub grid: Vec<Vec<f64>>,
    pub threshold: ThresholdRule,
}

impl AdaptiveConfig {
    pub fn new(s: f64, rho: f64, grid: Vec<Vec<f64>>, threshold: ThresholdRule) -> Self {
        AdaptiveConfig { s, rho, grid, threshold }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidParameter(format!("s must lie in (0, 1), got {}", self.s)));
        }
        if !(self.rho > 1.0) || !self.rho.is_finite() {
            return Err(Error::InvalidParameter(format!("rho must exceed 1, got {}", self.rho)));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("adaptive evaluation grid is empty".into()));
        }
        if let Some(p) = self.grid.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if let ThresholdRule::Default { constant } = self.threshold {
            if !(constant > 0.0) {
                return Err(Error::InvalidParameter(format!("threshold constant must be positive, got {constant}")));
            }
        }
        Ok(())
    }

    /// `K = ⌊log_ρ(n^{1-s})⌋`.
    pub fn ladder_top(&self, n: usize) -> usize {
        let k = (1.0 - self.s) * (n.max(1) as f64).ln() / self.rho.ln();
        (k + 1e-9).floor().max(0.0) as usize
    }

    /// `h_k = min(n^{s-1} ρ^k, 1)` for `k = 0..=K+1`.
    pub fn ladder(&self, n: usize) -> Vec<f64> {
        let h0 = (n.max(1) as f64).powf(self.s - 1.0);
        (0..=self.ladder_top(n) + 1)
            .map(|k| (h0 * self.rho.powi(k as i32)).min(1.0))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderSelection {
    pub k_hat: usize,
    /// `(k, l)` of the first violated comparison `‖ĝ_{k+1} - ĝ_l‖ > ζ̂_l + ζ̂_{k+1}`.
    pub trigger: Option<(usize, usize)>,
}

/// Sup distance over the evaluation grid.
pub fn grid_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Scans `k = 0, 1, ..., K` and stops at the first `k` for which some
/// `l ≤ k` has `‖ĝ_{k+1} - ĝ_l‖ > ζ̂_l + ζ̂_{k+1}`; returns `K` when no
/// comparison fires. `estimates` and `thresholds` have `K + 2` entries.
pub fn select_ladder_index(estimates: &[Vec<f64>], thresholds: &[f64]) -> Result<LadderSelection> {
    if estimates.len() < 2 || thresholds.len() != estimates.len() {
        return Err(Error::InvalidParameter(format!(
            "ladder needs K + 2 >= 2 estimates with matching thresholds (got {} and {})",
            estimates.len(),
            thresholds.len()
        )));
    }
    let top = estimates.len() - 2;
    for k in 0..=top {
        let next = &estimates[k + 1];
        for l in 0..=k {
            if grid_distance(next, &estimates[l]) > thresholds[l] + thresholds[k + 1] {
                return Ok(LadderSelection {
                    k_hat: k,
                    trigger: Some((k, l)),
                });
            }
        }
    }
    Ok(LadderSelection {
        k_hat: top,
        trigger: None,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveResult {
    pub selection: LadderSelection,
    pub bandwidth: f64,
    pub bandwidths: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// `estimates[k][i]` is `ĝ_k` at grid point `i`.
    pub estimates: Vec<Vec<f64>>,
    /// Hill estimate used by the default thresholds.
    pub tail_index: Option<f64>,
}

impl AdaptiveResult {
    /// `max_{l < k} ‖ĝ_k - ĝ_l‖` for every `k` (`None` at `k = 0`).
    pub fn max_deltas(&self) -> Vec<Option<f64>> {
        (0..self.estimates.len())
            .map(|k| {
                (0..k)
                    .map(|l| grid_distance(&self.estimates[k], &self.estimates[l]))
                    .reduce(f64::max)
            })
            .collect()
    }

    /// Comma-separated diagnostics: `k,h_k,zeta_k,max_delta,selected`.
    pub fn write_diagnostics_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,h_k,zeta_k,max_delta,selected")?;
        for (k, delta) in self.max_deltas().into_iter().enumerate() {
            writeln!(
                w,
                "{k},{},{},{},{}",
                self.bandwidths[k],
                self.thresholds[k],
                delta.map(|d| d.to_string()).unwrap_or_default(),
                u8::from(k == self.selection.k_hat)
            )?;
        }
        Ok(())
    }
}

fn ladder_config(beta_star: u32, h: f64) -> EstimatorConfig {
    EstimatorConfig::new(beta_star, h)
        .with_fallback(FallbackPolicy::DegradeDegree)
        .with_empty_window(EmptyWindowPolicy::Expand)
}

/// Tail index from residuals of the local-constant pilot fit at
/// `simulation_bandwidth(n, q, 0)`, using the `⌊√m⌋` smallest of the `m`
/// strictly negative residuals.
pub fn pilot_tail_index(data: &Dataset) -> Result<f64> {
    let h = simulation_bandwidth(data.len(), data.dim(), 0);
    let mut residuals = Vec::with_capacity(data.len());
    for (x, &y) in data.points().zip(data.responses()) {
        let r = y - fit_local_constant(data, x, h)?;
        if r < 0.0 {
            residuals.push(r);
        }
    }
    let k = ((residuals.len() as f64).sqrt().floor() as usize).max(1);
    hill_tail_index(&residuals, k)
}

pub fn adaptive_bandwidth(data: &Dataset, beta_star: u32, cfg: &AdaptiveConfig) -> Result<AdaptiveResult> {
    cfg.validate(data.dim())?;
    let n = data.len();
    let bandwidths = cfg.ladder(n);

    let (thresholds, tail_index) = match &cfg.threshold {
        ThresholdRule::Fixed { value } => (vec![*value; bandwidths.len()], None),
        ThresholdRule::Custom(f) => (bandwidths.iter().enumerate().map(|(k, &h)| f(k, h)).collect(), None),
        ThresholdRule::Default { constant } => {
            let alpha = pilot_tail_index(data)?;
            let nf = n as f64;
            let z = bandwidths
                .iter()
                .map(|&h| constant * (nf.ln() / (nf * h.powi(data.dim() as i32))).powf(1.0 / alpha))
                .collect();
            (z, Some(alpha))
        }
    };
    if let Some(z) = thresholds.iter().find(|z| z.is_nan() || **z < 0.0) {
        return Err(Error::InvalidParameter(format!("thresholds must be nonnegative, got {z}")));
    }

    let estimates = bandwidths
        .par_iter()
        .enumerate()
        .map(|(k, &h)| {
            fit_grid_serial(data, &cfg.grid, &ladder_config(beta_star, h))
                .map(|fits| fits.into_iter().map(|f| f.value).collect::<Vec<f64>>())
                .map_err(|e| Error::AtLadderStep { k, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;

    let selection = select_ladder_index(&estimates, &thresholds)?;
    Ok(AdaptiveResult {
        bandwidth: bandwidths[selection.k_hat],
        selection,
        bandwidths,
        thresholds,
        estimates,
        tail_index,
    })
}

/// How the bandwidth of an experiment cell is chosen.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BandwidthRule {
    Fixed { h: f64 },
    SimulationRule,
    BalancedRate { alpha: f64, beta: f64 },
    Adaptive(AdaptiveConfig),
}

impl BandwidthRule {
    /// Data-independent bandwidth, or `None` for the adaptive rule.
    pub fn resolve(&self, n: usize, dim: usize, beta_star: u32) -> Result<Option<f64>> {
        Ok(match self {
            BandwidthRule::Fixed { h } => {
                if !(*h > 0.0) {
                    return Err(Error::InvalidParameter(format!("fixed bandwidth must be positive, got {h}")));
                }
                Some(h.min(1.0))
            }
            BandwidthRule::SimulationRule => Some(simulation_bandwidth(n, dim, beta_star)),
            BandwidthRule::BalancedRate { alpha, beta } => Some(balanced_bandwidth(n, dim, *alpha, *beta)?),
            BandwidthRule::Adaptive(_) => None,
        })
    }

    /// Theoretical log-log slope `-β/(αβ+q)` of the sup-error, when known.
    pub fn expected_rate_slope(&self, dim: usize) -> Option<f64> {
        match self {
            BandwidthRule::BalancedRate { alpha, beta } => Some(-beta / (alpha * beta + dim as f64)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulation_rule() {
        assert!((simulation_bandwidth(100, 2, 3) - 0.46416).abs() < 1e-4);
        assert_eq!(simulation_bandwidth(1, 2, 3), 1.0);
        let h = simulation_bandwidth(8000, 3, 0);
        assert!((h - (-(8000f64.ln()) / 4.0).exp()).abs() < 1e-12);
        assert!((h - 0.10574).abs() < 1e-4);
    }

    #[test]
    fn balanced_rule() {
        let n = 3f64.exp().round() as usize; // 20
        let h = balanced_bandwidth(n, 1, 1.0, 1.0).unwrap();
        let want = ((n as f64).ln() / n as f64).sqrt();
        assert!((h - want).abs() < 1e-12);
        assert!((balanced_bandwidth(1000, 2, 1.0, 2.0).unwrap() - 0.2883).abs() < 1e-3);
        assert!(balanced_bandwidth(1000, 1, 1e6, 1.0).unwrap() > 0.99);
        assert!(balanced_bandwidth(2, 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn hill_errors() {
        assert!(matches!(hill_tail_index(&[-1.0; 10], 3), Err(Error::DegenerateTail(_))));
        assert!(matches!(hill_tail_index(&[-1.0, -2.0], 3), Err(Error::InsufficientData { .. })));
        assert!(hill_tail_index(&[-1.0, 0.5, -2.0], 1).is_err());
        assert!(matches!(hill_tail_index(&[0.0, -1.0, -2.0], 1), Err(Error::DegenerateTail(_))));
    }

    #[test]
    fn hill_on_exact_power_law() {
        // Quantiles of P(|r| ≤ z) = z^2 on a regular grid.
        let r: Vec<f64> = (1..=10_000).map(|i| -((i as f64) / 10_001.0).sqrt()).collect();
        let a = hill_tail_index(&r, 500).unwrap();
        assert!((a - 2.0).abs() < 0.1, "{a}");
    }

    #[test]
    fn ladder_shape() {
        let cfg = AdaptiveConfig::new(0.5, 2.0, vec![vec![0.5]], ThresholdRule::Fixed { value: 0.0 });
        assert_eq!(cfg.ladder_top(16), 2);
        let h = cfg.ladder(16);
        assert_eq!(h.len(), 4);
        assert!((h[0] - 0.25).abs() < 1e-12);
        assert_eq!(h[2], 1.0);
        assert_eq!(h[3], 1.0);
    }

    #[test]
    fn selection_boundary_cases() {
        let est = vec![vec![0.0, 1.0], vec![0.5, 1.0], vec![0.5, 1.2], vec![0.9, 1.0]];
        let inf = vec![f64::INFINITY; 4];
        assert_eq!(select_ladder_index(&est, &inf).unwrap(), LadderSelection { k_hat: 2, trigger: None });
        let zero = vec![0.0; 4];
        assert_eq!(
            select_ladder_index(&est, &zero).unwrap(),
            LadderSelection { k_hat: 0, trigger: Some((0, 0)) }
        );
        // Fires only once ĝ_3 is compared against ĝ_0.
        let z = vec![0.3, 0.3, 0.3, 0.3];
        assert_eq!(
            select_ladder_index(&est, &z).unwrap(),
            LadderSelection { k_hat: 2, trigger: Some((2, 0)) }
        );
        assert!(select_ladder_index(&est[..1], &z[..1]).is_err());
    }
}
