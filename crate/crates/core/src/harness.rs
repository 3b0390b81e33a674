//! Seeded Monte Carlo experiments.
//!
//! Every replication draws from its own ChaCha stream keyed by
//! `(master_seed, β*, n, r)`, so results do not depend on thread scheduling
//! or on which other cells are part of the experiment.

use std::fmt::Write as _;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{adaptive_bandwidth, AdaptiveConfig, AdaptiveResult, BandwidthRule};
use crate::error::{Error, Result};
use crate::estimator::{fit_grid_serial, Dataset, EmptyWindowPolicy, EstimatorConfig, FallbackPolicy, FitStatus};
use crate::synthetic::{gen_design, make_sample, sample_errors, DesignKind, DesignSpec, ErrorSpec, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evaluation {
    /// The single point `(0.5, ..., 0.5)`.
    CenterPoint,
    /// `per_axis^q` points; see [`evaluation_grid`].
    Grid { per_axis: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dim: usize,
    pub n_list: Vec<usize>,
    pub beta_star_list: Vec<u32>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub master_seed: u64,
    pub design: DesignKind,
    pub error: ErrorSpec,
    pub model: ModelSpec,
    pub bandwidth: BandwidthRule,
    pub evaluation: Evaluation,
    #[serde(default)]
    pub fallback: FallbackPolicy,
}

pub const DEFAULT_REPLICATIONS: usize = 500;

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("n_list must be nonempty with positive sizes".into());
        }
        if self.beta_star_list.is_empty() {
            return bad("beta_star_list must be nonempty".into());
        }
        if let Evaluation::Grid { per_axis: 0 } = self.evaluation {
            return bad("evaluation grid needs at least one point per axis".into());
        }
        Ok(())
    }

    pub fn evaluation_points(&self) -> Vec<Vec<f64>> {
        match self.evaluation {
            Evaluation::CenterPoint => vec![vec![0.5; self.dim]],
            Evaluation::Grid { per_axis } => evaluation_grid(self.dim, per_axis),
        }
    }

    /// The sample of replication `r` in cell `(β*, n)`.
    pub fn sample(&self, beta_star: u32, n: usize, replication: usize) -> Result<Dataset> {
        let mut rng = replication_rng(self.master_seed, beta_star, n, replication);
        let design = gen_design(&DesignSpec::new(self.design.clone(), self.dim, n), &mut rng)?;
        let errors = sample_errors(&self.error, n, &mut rng)?;
        make_sample(&design, &self.model, &errors)
    }

    fn estimator_config(&self, beta_star: u32, h: f64) -> EstimatorConfig {
        EstimatorConfig::new(beta_star, h)
            .with_fallback(self.fallback)
            .with_empty_window(EmptyWindowPolicy::Expand)
    }
}

/// The lattice `{i/N : i = 1..N}^q`, first coordinate fastest, laid out
/// like the equidistant design. `N = 1` is taken to mean the center point.
pub fn evaluation_grid(dim: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = if per_axis <= 1 {
        vec![0.5]
    } else {
        (1..=per_axis).map(|i| i as f64 / per_axis as f64).collect()
    };
    let total = axis.len().pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            (0..dim)
                .map(|_| {
                    let v = axis[idx % axis.len()];
                    idx /= axis.len();
                    v
                })
                .collect()
        })
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for replication `r` of cell `(β*, n)`.
pub fn replication_rng(master_seed: u64, beta_star: u32, n: usize, replication: usize) -> ChaCha8Rng {
    let key = splitmix64(master_seed ^ splitmix64(u64::from(beta_star) ^ splitmix64(n as u64).rotate_left(17)));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(replication as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicationStatus {
    Exact,
    Degraded,
    Expanded,
}

impl From<&FitStatus> for ReplicationStatus {
    fn from(s: &FitStatus) -> Self {
        match s {
            FitStatus::Exact => ReplicationStatus::Exact,
            FitStatus::Degraded { .. } => ReplicationStatus::Degraded,
            FitStatus::Expanded { .. } => ReplicationStatus::Expanded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub beta_star: u32,
    pub n: usize,
    /// Bandwidth used, when it does not depend on the sample.
    pub bandwidth: Option<f64>,
    pub mse: f64,
    pub mc_stderr: f64,
    pub replications: usize,
    pub n_exact: usize,
    pub n_degraded: usize,
    pub n_expanded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub cells: Vec<CellResult>,
}

/// Rounds to four significant digits for display.
pub fn sig4(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (3 - mag).max(0) as usize;
    if mag.abs() >= 5 {
        format!("{v:.3e}")
    } else {
        format!("{v:.decimals$}")
    }
}

impl ResultTable {
    pub fn cell(&self, beta_star: u32, n: usize) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.beta_star == beta_star && c.n == n)
    }

    pub const CSV_HEADER: &'static str = "beta_star,n,mse,mc_stderr,n_exact,n_degraded,n_expanded";

    /// Full-precision CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                c.beta_star, c.n, c.mse, c.mc_stderr, c.n_exact, c.n_degraded, c.n_expanded
            )?;
        }
        Ok(())
    }

    /// Rows β*, columns n, entries rounded to four significant digits.
    pub fn display_grid(&self) -> String {
        let mut ns: Vec<usize> = self.cells.iter().map(|c| c.n).collect();
        ns.sort_unstable();
        ns.dedup();
        let mut betas: Vec<u32> = self.cells.iter().map(|c| c.beta_star).collect();
        betas.sort_unstable();
        betas.dedup();
        let mut out = String::new();
        let _ = write!(out, "{:>8}", "beta*");
        for n in &ns {
            let _ = write!(out, " {:>12}", format!("n={n}"));
        }
        out.push('\n');
        for b in betas {
            let _ = write!(out, "{b:>8}");
            for &n in &ns {
                let v = self.cell(b, n).map(|c| sig4(c.mse)).unwrap_or_else(|| "-".into());
                let _ = write!(out, " {v:>12}");
            }
            out.push('\n');
        }
        out
    }
}

struct ReplicationOutcome {
    sq_error: f64,
    status: ReplicationStatus,
}

fn run_replication(
    spec: &ExperimentSpec,
    points: &[Vec<f64>],
    truth: &[f64],
    beta_star: u32,
    n: usize,
    replication: usize,
) -> Result<ReplicationOutcome> {
    let data = spec.sample(beta_star, n, replication)?;
    let h = match &spec.bandwidth {
        BandwidthRule::Adaptive(cfg) => adaptive_bandwidth(&data, beta_star, cfg)?.bandwidth,
        rule => rule.resolve(n, spec.dim, beta_star)?.expect("non-adaptive rule"),
    };
    let fits = fit_grid_serial(&data, points, &spec.estimator_config(beta_star, h))?;
    let sq_error = fits
        .iter()
        .zip(truth)
        .map(|(f, g)| (f.value - g).powi(2))
        .sum::<f64>()
        / points.len() as f64;
    let status = fits
        .iter()
        .map(|f| ReplicationStatus::from(&f.status))
        .max()
        .unwrap_or(ReplicationStatus::Exact);
    Ok(ReplicationOutcome { sq_error, status })
}

fn run_cells(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let points = spec.evaluation_points();
    let truth = points.iter().map(|x| spec.model.eval(x)).collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for &beta_star in &spec.beta_star_list {
        for &n in &spec.n_list {
            let outcomes = (0..spec.replications)
                .into_par_iter()
                .map(|r| {
                    run_replication(spec, &points, &truth, beta_star, n, r).map_err(|e| Error::AtReplication {
                        beta_star,
                        n,
                        replication: r,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let reps = outcomes.len() as f64;
            let mse = outcomes.iter().map(|o| o.sq_error).sum::<f64>() / reps;
            let var = if outcomes.len() > 1 {
                outcomes.iter().map(|o| (o.sq_error - mse).powi(2)).sum::<f64>() / (reps - 1.0)
            } else {
                0.0
            };
            let count = |s| outcomes.iter().filter(|o| o.status == s).count();
            cells.push(CellResult {
                beta_star,
                n,
                bandwidth: spec.bandwidth.resolve(n, spec.dim, beta_star)?,
                mse,
                mc_stderr: (var / reps).sqrt(),
                replications: outcomes.len(),
                n_exact: count(ReplicationStatus::Exact),
                n_degraded: count(ReplicationStatus::Degraded),
                n_expanded: count(ReplicationStatus::Expanded),
            });
        }
    }
    Ok(ResultTable { cells })
}

/// Mean squared error of `ĝ(0.5, ..., 0.5)` per `(β*, n)` cell.
pub fn run_mse_center(spec: &ExperimentSpec) -> Result<ResultTable> {
    if spec.evaluation != Evaluation::CenterPoint {
        return Err(Error::InvalidParameter("run_mse_center needs evaluation = center_point".into()));
    }
    run_cells(spec)
}

/// Grid average of the pointwise mean squared errors per `(β*, n)` cell.
pub fn run_mse_grid(spec: &ExperimentSpec) -> Result<ResultTable> {
    if !matches!(spec.evaluation, Evaluation::Grid { .. }) {
        return Err(Error::InvalidParameter("run_mse_grid needs evaluation = grid".into()));
    }
    run_cells(spec)
}

/// Dispatches on the evaluation kind.
pub fn run_mse(spec: &ExperimentSpec) -> Result<ResultTable> {
    run_cells(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub bandwidth: Option<f64>,
    /// Median over replications of `max_grid |ĝ - g|`.
    pub median_sup_error: f64,
    pub sup_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub beta_star: u32,
    pub points: Vec<RatePoint>,
    /// Least-squares slope of `ln(median sup-error)` against `ln n`; `None`
    /// when the errors are at solver precision.
    pub slope: Option<f64>,
    pub expected_slope: Option<f64>,
}

impl RateStudy {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "beta_star,n,bandwidth,median_sup_error")?;
        for p in &self.points {
            let h = p.bandwidth.map(|h| h.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", self.beta_star, p.n, h, p.median_sup_error)?;
        }
        Ok(())
    }
}

/// Error floor below which sup-errors are treated as exact recovery.
const RATE_FLOOR: f64 = 1e-7;

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Sup-error convergence study over `n_list`, one study per `β*`.
pub fn run_rate_study(spec: &ExperimentSpec, n_list: &[usize]) -> Result<Vec<RateStudy>> {
    spec.validate()?;
    if n_list.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "rate study needs at least 4 sample sizes, got {}",
            n_list.len()
        )));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("rate study sample sizes must increase".into()));
    }
    let points = spec.evaluation_points();
    let truth = points.iter().map(|x| spec.model.eval(x)).collect::<Result<Vec<_>>>()?;

    let mut studies = Vec::new();
    for &beta_star in &spec.beta_star_list {
        let mut rate_points = Vec::new();
        for &n in n_list {
            let sup_errors = (0..spec.replications)
                .into_par_iter()
                .map(|r| {
                    let run = || -> Result<f64> {
                        let data = spec.sample(beta_star, n, r)?;
                        let h = match &spec.bandwidth {
                            BandwidthRule::Adaptive(cfg) => adaptive_bandwidth(&data, beta_star, cfg)?.bandwidth,
                            rule => rule.resolve(n, spec.dim, beta_star)?.expect("non-adaptive rule"),
                        };
                        let fits = fit_grid_serial(&data, &points, &spec.estimator_config(beta_star, h))?;
                        Ok(fits
                            .iter()
                            .zip(&truth)
                            .map(|(f, g)| (f.value - g).abs())
                            .fold(0.0, f64::max))
                    };
                    run().map_err(|e| Error::AtReplication {
                        beta_star,
                        n,
                        replication: r,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rate_points.push(RatePoint {
                n,
                bandwidth: spec.bandwidth.resolve(n, spec.dim, beta_star)?,
                median_sup_error: median(&sup_errors),
                sup_errors,
            });
        }
        let slope = if rate_points.iter().all(|p| p.median_sup_error > RATE_FLOOR) {
            let x: Vec<f64> = rate_points.iter().map(|p| (p.n as f64).ln()).collect();
            let y: Vec<f64> = rate_points.iter().map(|p| p.median_sup_error.ln()).collect();
            Some(ols_slope(&x, &y))
        } else {
            None
        };
        studies.push(RateStudy {
            beta_star,
            points: rate_points,
            slope,
            expected_slope: spec.bandwidth.expected_rate_slope(spec.dim),
        });
    }
    Ok(studies)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveRun {
    pub beta_star: u32,
    pub n: usize,
    pub replication: usize,
    pub result: AdaptiveResult,
}

/// Adaptive bandwidth selection on every replication of every cell.
pub fn run_adaptive(spec: &ExperimentSpec, cfg: &AdaptiveConfig) -> Result<Vec<AdaptiveRun>> {
    spec.validate()?;
    let mut runs = Vec::new();
    for &beta_star in &spec.beta_star_list {
        for &n in &spec.n_list {
            let cell = (0..spec.replications)
                .into_par_iter()
                .map(|r| {
                    spec.sample(beta_star, n, r)
                        .and_then(|data| adaptive_bandwidth(&data, beta_star, cfg))
                        .map(|result| AdaptiveRun {
                            beta_star,
                            n,
                            replication: r,
                            result,
                        })
                        .map_err(|e| Error::AtReplication {
                            beta_star,
                            n,
                            replication: r,
                            source: Box::new(e),
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            runs.extend(cell);
        }
    }
    Ok(runs)
}

/// Long-format diagnostics of adaptive runs.
pub fn write_adaptive_csv<W: Write>(runs: &[AdaptiveRun], mut w: W) -> Result<()> {
    writeln!(w, "beta_star,n,replication,k,h_k,zeta_k,max_delta,selected")?;
    for run in runs {
        let res = &run.result;
        for (k, delta) in res.max_deltas().into_iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{k},{},{},{},{}",
                run.beta_star,
                run.n,
                run.replication,
                res.bandwidths[k],
                res.thresholds[k],
                delta.map(|d| d.to_string()).unwrap_or_default(),
                u8::from(k == res.selection.k_hat)
            )?;
        }
    }
    Ok(())
}
