//! Linear programs of the form `minimize vᵀb subject to A b ≥ y`, `b` free.
//!
//! The solver works on the dual standard form
//!
//! ```text
//! maximize yᵀg   subject to   Aᵀg = v,  g ≥ 0
//! ```
//!
//! which has one equality row per coefficient and one column per
//! constraint, so the tableau stays `p × (m + p)` no matter how many data
//! points fall into a window. Phase one of this dual is exactly the search
//! for a boundedness certificate `g ≥ 0, Aᵀg = v`; the optimal primal `b` is
//! read off the simplex multipliers of phase two.

mod dense;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use simplex::{Phase, Tableau};

pub const DEFAULT_TOL: f64 = 1e-9;

/// `minimize vᵀb  s.t.  A b ≥ y` over free `b ∈ R^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    objective: Vec<f64>,
    // row-major m × p
    constraints: Vec<f64>,
    rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let p = objective.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::LengthMismatch {
                what: "constraint row",
                expected: p,
                got: bad.len(),
            });
        }
        Self::from_flat(objective, rows.concat(), rhs)
    }

    /// `constraints` is row-major with `objective.len()` columns.
    pub fn from_flat(objective: Vec<f64>, constraints: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let p = objective.len();
        let m = rhs.len();
        if p == 0 || m == 0 {
            return Err(Error::InvalidParameter(format!(
                "LP needs at least one variable and one constraint (p = {p}, m = {m})"
            )));
        }
        if constraints.len() != m * p {
            return Err(Error::LengthMismatch {
                what: "constraint matrix",
                expected: m * p,
                got: constraints.len(),
            });
        }
        Ok(LpProblem {
            objective,
            constraints,
            rhs,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.num_vars();
        &self.constraints[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.constraints.chunks_exact(self.num_vars())
    }

    /// `Aᵀ` as a row-major `p × m` matrix.
    fn transposed(&self) -> Vec<f64> {
        let (m, p) = (self.num_constraints(), self.num_vars());
        let mut at = vec![0.0; p * m];
        for i in 0..m {
            for j in 0..p {
                at[j * m + i] = self.constraints[i * p + j];
            }
        }
        at
    }

    fn degenerate_limit(&self) -> usize {
        50 * (self.num_constraints() + self.num_vars())
    }

    /// Largest violation `max_i (y_i - A_i b)`, or 0 when `b` is feasible.
    pub fn max_violation(&self, b: &[f64]) -> f64 {
        self.rows()
            .zip(&self.rhs)
            .map(|(row, &y)| y - dot(row, b))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LpOutcome {
    Optimal { solution: Vec<f64>, objective_value: f64 },
    Unbounded,
    Infeasible,
}

impl LpOutcome {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, LpOutcome::Unbounded)
    }
}

/// Nonnegative multipliers `g` with `Aᵀg = v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessCertificate {
    multipliers: Vec<f64>,
}

impl BoundednessCertificate {
    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    /// `‖Aᵀg - v‖_∞`.
    pub fn residual(&self, prob: &LpProblem) -> f64 {
        let mut atg = vec![0.0; prob.num_vars()];
        for (row, &g) in prob.rows().zip(&self.multipliers) {
            for (acc, &a) in atg.iter_mut().zip(row) {
                *acc += a * g;
            }
        }
        atg.iter()
            .zip(prob.objective())
            .map(|(a, v)| (a - v).abs())
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("LP tolerance must be positive, got {tol}")))
    }
}

/// Looks for `g ≥ 0` with `Aᵀg = v`. Such a `g` exists iff the LP is
/// bounded below on a nonempty feasible set.
pub fn check_bounded(prob: &LpProblem, tol: f64) -> Result<Option<BoundednessCertificate>> {
    check_tol(tol)?;
    let mut tab = Tableau::new(
        &prob.transposed(),
        prob.objective(),
        prob.num_constraints(),
        tol,
        prob.degenerate_limit(),
    );
    if !tab.phase_one()? {
        return Ok(None);
    }
    Ok(Some(BoundednessCertificate {
        multipliers: tab.primal(),
    }))
}

pub fn solve(prob: &LpProblem, tol: f64) -> Result<LpOutcome> {
    check_tol(tol)?;
    let m = prob.num_constraints();
    let mut tab = Tableau::new(&prob.transposed(), prob.objective(), m, tol, prob.degenerate_limit());
    if !tab.phase_one()? {
        // No certificate: unbounded, unless the primal is empty to begin with.
        return if primal_feasible(prob, tol)? {
            Ok(LpOutcome::Unbounded)
        } else {
            Ok(LpOutcome::Infeasible)
        };
    }
    let cost: Vec<f64> = prob.rhs().iter().map(|y| -y).collect();
    match tab.phase_two(&cost)? {
        // Dual unbounded above: the primal constraints are inconsistent.
        Phase::Unbounded => Ok(LpOutcome::Infeasible),
        Phase::Optimal => {
            let solution: Vec<f64> = tab.duals(&cost).into_iter().map(|p| -p).collect();
            let objective_value = dot(prob.objective(), &solution);
            Ok(LpOutcome::Optimal {
                solution,
                objective_value,
            })
        }
    }
}

/// Farkas test: `A b ≥ y` is infeasible iff some `g ≥ 0` has `Aᵀg = 0`,
/// `1ᵀg = 1` and `yᵀg > 0`.
fn primal_feasible(prob: &LpProblem, tol: f64) -> Result<bool> {
    let (m, p) = (prob.num_constraints(), prob.num_vars());
    let mut mat = prob.transposed();
    mat.extend(std::iter::repeat_n(1.0, m));
    let mut r = vec![0.0; p];
    r.push(1.0);
    let mut tab = Tableau::new(&mat, &r, m, tol, prob.degenerate_limit());
    if !tab.phase_one()? {
        return Ok(true);
    }
    let cost: Vec<f64> = prob.rhs().iter().map(|y| -y).collect();
    tab.phase_two(&cost)?;
    let g = tab.primal();
    Ok(dot(prob.rhs(), &g) <= tol * (1.0 + prob.rhs().iter().map(|y| y.abs()).fold(0.0, f64::max)))
}
