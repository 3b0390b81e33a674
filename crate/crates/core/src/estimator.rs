//! The local polynomial frontier estimator.
//!
//! At an evaluation point `x` the estimate is `p(x)`, where `p` has total
//! degree at most `β*`, satisfies `p(X_i) ≥ Y_i` for every observation in
//! the clipped window `‖X_i - x‖_∞ ≤ h`, and minimizes `∫_window p`.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, PolyCoeffs};
use crate::error::{check_dim, in_unit_cube, Error, Result};
use crate::lp::{self, LpOutcome, LpProblem};
use crate::window::Window;

/// Observations `(X_i, Y_i)` with `X_i ∈ [0,1]^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    // row-major n × dim
    points: Vec<f64>,
    responses: Vec<f64>,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, responses: Vec<f64>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::from_flat(dim, points.concat(), responses)
    }

    pub fn from_flat(dim: usize, points: Vec<f64>, responses: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dataset dimension must be at least 1".into()));
        }
        if responses.is_empty() {
            return Err(Error::InvalidParameter("dataset must contain at least one observation".into()));
        }
        if points.len() != dim * responses.len() {
            return Err(Error::LengthMismatch {
                what: "design points",
                expected: dim * responses.len(),
                got: points.len() / dim,
            });
        }
        if let Some(bad) = points.chunks_exact(dim).find(|p| !in_unit_cube(p)) {
            return Err(Error::OutsideUnitCube(bad.to_vec()));
        }
        if let Some(y) = responses.iter().find(|y| !y.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite response {y}")));
        }
        Ok(Dataset {
            dim,
            points,
            responses,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    /// Copy with every response shifted by `c`.
    pub fn shifted(&self, c: f64) -> Dataset {
        Dataset {
            dim: self.dim,
            points: self.points.clone(),
            responses: self.responses.iter().map(|y| y + c).collect(),
        }
    }

    /// Copy with one more observation appended.
    pub fn with_observation(&self, point: &[f64], response: f64) -> Result<Dataset> {
        check_dim(self.dim, point.len())?;
        let mut points = self.points.clone();
        points.extend_from_slice(point);
        let mut responses = self.responses.clone();
        responses.push(response);
        Dataset::from_flat(self.dim, points, responses)
    }

    /// Indices of observations inside the window.
    pub fn in_window(&self, w: &Window) -> Vec<usize> {
        (0..self.len()).filter(|&i| w.contains_unchecked(self.point(i))).collect()
    }

    /// Reads `x1,...,xq,y` comma-separated text with a header line.
    pub fn read_csv<R: Read>(reader: R, source: &Path) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let parse_err = |line: u64, message: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            message,
        };
        let headers = rdr.headers()?.clone();
        let ncol = headers.len();
        if ncol < 2 {
            return Err(parse_err(1, "header must be x1,...,xq,y".into()));
        }
        let dim = ncol - 1;
        for (k, name) in headers.iter().enumerate() {
            let want = if k == dim { "y".to_string() } else { format!("x{}", k + 1) };
            if name != want {
                return Err(parse_err(1, format!("column {} is named '{name}', expected '{want}'", k + 1)));
            }
        }
        let mut points = Vec::new();
        let mut responses = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != ncol {
                return Err(parse_err(line, format!("expected {ncol} fields, found {}", record.len())));
            }
            for (k, field) in record.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(line, format!("cannot parse '{field}' as a number")))?;
                if k < dim {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(parse_err(line, format!("coordinate x{} = {v} is outside [0, 1]", k + 1)));
                    }
                    points.push(v);
                } else {
                    responses.push(v);
                }
            }
        }
        if responses.is_empty() {
            return Err(parse_err(1, "no observations".into()));
        }
        Dataset::from_flat(dim, points, responses)
    }

    pub fn read_csv_file(path: &Path) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Dataset::read_csv(std::io::BufReader::new(file), path)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (p, y) in self.points().zip(&self.responses) {
            let mut rec: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FallbackPolicy {
    /// Report an unbounded local LP as an error.
    Error,
    /// Retry with degree `β* - 1, ..., 0`.
    #[default]
    DegradeDegree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmptyWindowPolicy {
    Error,
    /// Grow the bandwidth geometrically until the window holds a point.
    #[default]
    Expand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub beta_star: u32,
    pub bandwidth: f64,
    #[serde(default)]
    pub fallback: FallbackPolicy,
    #[serde(default)]
    pub empty_window: EmptyWindowPolicy,
    #[serde(default = "default_expand_factor")]
    pub expand_factor: f64,
    #[serde(default = "default_lp_tol")]
    pub lp_tol: f64,
}

fn default_expand_factor() -> f64 {
    1.5
}

fn default_lp_tol() -> f64 {
    lp::DEFAULT_TOL
}

impl EstimatorConfig {
    /// Strict configuration: every degeneracy is an error.
    pub fn new(beta_star: u32, bandwidth: f64) -> Self {
        EstimatorConfig {
            beta_star,
            bandwidth,
            fallback: FallbackPolicy::Error,
            empty_window: EmptyWindowPolicy::Error,
            expand_factor: default_expand_factor(),
            lp_tol: default_lp_tol(),
        }
    }

    pub fn with_fallback(mut self, fallback: FallbackPolicy) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn with_empty_window(mut self, policy: EmptyWindowPolicy) -> Self {
        self.empty_window = policy;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        if !(self.expand_factor > 1.0) || !self.expand_factor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "expand_factor must exceed 1, got {}",
                self.expand_factor
            )));
        }
        if !(self.lp_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("lp_tol must be positive, got {}", self.lp_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FitStatus {
    Exact,
    /// The requested degree was unbounded; `degree` is the degree used.
    Degraded { degree: u32 },
    /// The window was empty at the requested bandwidth. `degree` is the
    /// degree finally used at the expanded bandwidth.
    Expanded { bandwidth: f64, degree: u32 },
}

impl FitStatus {
    pub fn label(&self) -> &'static str {
        match self {
            FitStatus::Exact => "exact",
            FitStatus::Degraded { .. } => "degraded",
            FitStatus::Expanded { .. } => "expanded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub value: f64,
    pub coeffs: PolyCoeffs,
    pub status: FitStatus,
    pub n_active: usize,
    /// Optimal objective `vᵀb`, the integral of the fit over the window.
    pub objective: f64,
}

/// Estimate of the frontier at `x`.
pub fn fit_at(data: &Dataset, x: &[f64], cfg: &EstimatorConfig) -> Result<FitResult> {
    cfg.validate()?;
    check_dim(data.dim(), x.len())?;
    if !in_unit_cube(x) {
        return Err(Error::OutsideUnitCube(x.to_vec()));
    }

    let mut h = cfg.bandwidth.min(1.0);
    let mut window = Window::clip(x, h)?;
    let mut active = data.in_window(&window);
    let mut expanded = false;
    while active.is_empty() {
        match cfg.empty_window {
            EmptyWindowPolicy::Error => {
                return Err(Error::EmptyWindow {
                    center: x.to_vec(),
                    bandwidth: h,
                })
            }
            EmptyWindowPolicy::Expand => {
                // h = 1 covers the whole cube, which holds every point.
                h = (h * cfg.expand_factor).min(1.0);
                window = Window::clip(x, h)?;
                active = data.in_window(&window);
                expanded = true;
            }
        }
    }

    let mut degree = cfg.beta_star;
    loop {
        match fit_degree(data, &window, &active, degree, cfg.lp_tol)? {
            Some((coeffs, objective)) => {
                let status = if expanded {
                    FitStatus::Expanded { bandwidth: h, degree }
                } else if degree < cfg.beta_star {
                    FitStatus::Degraded { degree }
                } else {
                    FitStatus::Exact
                };
                return Ok(FitResult {
                    value: coeffs.center_value(),
                    coeffs,
                    status,
                    n_active: active.len(),
                    objective,
                });
            }
            None if degree > 0 && cfg.fallback == FallbackPolicy::DegradeDegree => degree -= 1,
            None => {
                return Err(Error::Unbounded {
                    center: x.to_vec(),
                    degree,
                })
            }
        }
    }
}

/// Solves the local LP at one degree; `None` when it is unbounded.
fn fit_degree(
    data: &Dataset,
    window: &Window,
    active: &[usize],
    degree: u32,
    tol: f64,
) -> Result<Option<(PolyCoeffs, f64)>> {
    let x = window.center();
    let basis = BasisSpec::new(data.dim(), degree)?;
    let p = basis.len();

    // Work in the rescaled variable (t - x) / s so that every monomial is
    // O(1) on the window; coefficient j scales by s^|j|.
    let s = window.bandwidth().min(1.0);
    let v = window.objective_vector(&basis)?;
    let scales: Vec<f64> = basis.indices().iter().map(|j| s.powi(j.degree() as i32)).collect();
    let v0 = v[0];
    let v_scaled: Vec<f64> = v.iter().zip(&scales).map(|(vj, sj)| vj / sj / v0).collect();

    let mut a = vec![0.0; active.len() * p];
    for (row, &i) in a.chunks_exact_mut(p).zip(active) {
        basis.fill_row(data.point(i), x, s, row);
    }
    let y: Vec<f64> = active.iter().map(|&i| data.responses()[i]).collect();
    let prob = LpProblem::from_flat(v_scaled, a, y)?;

    match lp::solve(&prob, tol)? {
        LpOutcome::Optimal { solution, .. } => {
            let coeffs: Vec<f64> = solution.iter().zip(&scales).map(|(b, sj)| b / sj).collect();
            let objective = coeffs.iter().zip(&v).map(|(b, vj)| b * vj).sum();
            Ok(Some((PolyCoeffs::new(basis, coeffs)?, objective)))
        }
        LpOutcome::Unbounded => Ok(None),
        LpOutcome::Infeasible => Err(Error::Infeasible(x.to_vec())),
    }
}

/// Local-constant estimate: the largest response in the window.
pub fn fit_local_constant(data: &Dataset, x: &[f64], h: f64) -> Result<f64> {
    check_dim(data.dim(), x.len())?;
    let w = Window::clip(x, h)?;
    data.points()
        .zip(data.responses())
        .filter(|(p, _)| w.contains_unchecked(p))
        .map(|(_, &y)| y)
        .reduce(f64::max)
        .ok_or_else(|| Error::EmptyWindow {
            center: x.to_vec(),
            bandwidth: h,
        })
}

/// [`fit_at`] over many points, evaluated in parallel.
pub fn fit_grid(data: &Dataset, grid: &[Vec<f64>], cfg: &EstimatorConfig) -> Result<Vec<FitResult>> {
    grid.par_iter()
        .enumerate()
        .map(|(index, x)| {
            fit_at(data, x, cfg).map_err(|e| Error::AtPoint {
                index,
                point: x.clone(),
                source: Box::new(e),
            })
        })
        .collect()
}

/// Sequential variant of [`fit_grid`] for callers that already run in parallel.
pub fn fit_grid_serial(data: &Dataset, grid: &[Vec<f64>], cfg: &EstimatorConfig) -> Result<Vec<FitResult>> {
    grid.iter()
        .enumerate()
        .map(|(index, x)| {
            fit_at(data, x, cfg).map_err(|e| Error::AtPoint {
                index,
                point: x.clone(),
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data1(xs: &[f64], ys: &[f64]) -> Dataset {
        Dataset::new(xs.iter().map(|&x| vec![x]).collect(), ys.to_vec()).unwrap()
    }

    #[test]
    fn local_constant_is_window_max() {
        let d = data1(&[0.45, 0.5, 0.55, 0.9], &[0.2, 0.7, 0.5, 3.0]);
        let r = fit_at(&d, &[0.5], &EstimatorConfig::new(0, 0.1)).unwrap();
        assert_eq!(r.value, 0.7);
        assert_eq!(r.status, FitStatus::Exact);
        assert_eq!(r.n_active, 3);
        assert_eq!(fit_local_constant(&d, &[0.5], 0.1).unwrap(), 0.7);
        assert_eq!(fit_local_constant(&d, &[0.95], 0.1).unwrap(), 3.0);
    }

    #[test]
    fn local_linear_through_two_points() {
        let d = data1(&[0.4, 0.6], &[1.0, 2.0]);
        let r = fit_at(&d, &[0.5], &EstimatorConfig::new(1, 0.15)).unwrap();
        assert!((r.value - 1.5).abs() < 1e-10);
        assert_eq!(r.status, FitStatus::Exact);
    }

    #[test]
    fn single_point_degrades_to_constant() {
        let d = data1(&[0.55, 0.9], &[1.3, 5.0]);
        let strict = EstimatorConfig::new(1, 0.1);
        assert!(matches!(fit_at(&d, &[0.5], &strict), Err(Error::Unbounded { degree: 1, .. })));
        let lenient = strict.with_fallback(FallbackPolicy::DegradeDegree);
        let r = fit_at(&d, &[0.5], &lenient).unwrap();
        assert_eq!(r.value, 1.3);
        assert_eq!(r.status, FitStatus::Degraded { degree: 0 });
    }

    #[test]
    fn empty_window_policies() {
        let d = data1(&[0.9], &[2.0]);
        let strict = EstimatorConfig::new(0, 0.1);
        assert!(matches!(fit_at(&d, &[0.1], &strict), Err(Error::EmptyWindow { .. })));
        assert!(fit_local_constant(&d, &[0.1], 0.1).is_err());
        let r = fit_at(&d, &[0.1], &strict.with_empty_window(EmptyWindowPolicy::Expand)).unwrap();
        assert_eq!(r.value, 2.0);
        match r.status {
            FitStatus::Expanded { bandwidth, degree } => {
                assert!((0.8..=1.0).contains(&bandwidth));
                assert_eq!(degree, 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_matches_pointwise() {
        let d = data1(&[0.1, 0.3, 0.35, 0.6, 0.62, 0.8, 0.95], &[1.0, 1.5, 1.2, 2.0, 2.1, 1.8, 2.5]);
        let cfg = EstimatorConfig::new(1, 0.2).with_fallback(FallbackPolicy::DegradeDegree);
        let grid: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64 / 10.0]).collect();
        let res = fit_grid(&d, &grid, &cfg).unwrap();
        for (x, r) in grid.iter().zip(&res) {
            assert_eq!(r, &fit_at(&d, x, &cfg).unwrap());
        }
        let bad = vec![vec![0.5], vec![1.5]];
        match fit_grid(&d, &bad, &cfg) {
            Err(Error::AtPoint { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let d = Dataset::new(vec![vec![0.1, 0.2], vec![0.3, 1.0]], vec![1.5, -2.0]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, d);

        let text = "x1,y\n0.5,1\n1.5,2\n";
        match Dataset::read_csv(text.as_bytes(), Path::new("bad.csv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(Dataset::read_csv("a,b\n0.5,1\n".as_bytes(), Path::new("h")).is_err());
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![vec![0.5, 1.1]], vec![0.0]).is_err());
        assert!(Dataset::new(vec![vec![0.5]], vec![0.0, 1.0]).is_err());
        assert!(Dataset::new(vec![], vec![]).is_err());
    }
}
