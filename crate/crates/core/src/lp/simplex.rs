//! Dense two-phase tableau simplex for `min cᵀz  s.t.  M z = r, z ≥ 0`.
//!
//! Phase one adds one artificial column per row and minimizes their sum.
//! Artificials left in the basis at level zero are pivoted out where
//! possible; rows where that is impossible are linearly redundant and keep
//! their artificial for the rest of the solve. Phase two never lets an
//! artificial column re-enter.
//!
//! Pricing is Dantzig's rule until the number of degenerate pivots exceeds
//! `degenerate_limit`, then Bland's rule for the remainder of the solve.

use crate::error::{Error, Result};

/// Pivot elements smaller than this (after row normalization) are ignored.
const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug)]
pub(crate) struct Tableau {
    rows: usize,
    real: usize,
    width: usize,
    // rows × (width + 1), rhs in the last column
    t: Vec<f64>,
    basis: Vec<usize>,
    // +1/-1 per row; rows with negative rhs are negated up front
    sign: Vec<f64>,
    // Original (sign-adjusted) matrix, kept to recompute basic quantities.
    m: Vec<f64>,
    r: Vec<f64>,
    tol: f64,
    bland: bool,
    degenerate: usize,
    degenerate_limit: usize,
    iterations: usize,
    max_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    /// `m` is row-major `rows × real`.
    pub(crate) fn new(m: &[f64], r: &[f64], real: usize, tol: f64, degenerate_limit: usize) -> Self {
        let rows = r.len();
        debug_assert_eq!(m.len(), rows * real);
        let width = real + rows;
        let stride = width + 1;
        let mut t = vec![0.0; rows * stride];
        let mut sign = vec![1.0; rows];
        let mut mm = m.to_vec();
        let mut rr = r.to_vec();
        for i in 0..rows {
            let s = if r[i] < 0.0 { -1.0 } else { 1.0 };
            sign[i] = s;
            for j in 0..real {
                mm[i * real + j] *= s;
                t[i * stride + j] = mm[i * real + j];
            }
            rr[i] *= s;
            t[i * stride + real + i] = 1.0;
            t[i * stride + width] = rr[i];
        }
        Tableau {
            rows,
            real,
            width,
            t,
            basis: (real..real + rows).collect(),
            sign,
            m: mm,
            r: rr,
            tol,
            bland: false,
            degenerate: 0,
            degenerate_limit,
            iterations: 0,
            max_iterations: 200 * (rows + width) + 1000,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.width + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.t[i * (self.width + 1) + self.width]
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= self.real
    }

    /// Phase one. Returns `false` when `M z = r, z ≥ 0` has no solution.
    pub(crate) fn phase_one(&mut self) -> Result<bool> {
        let cost: Vec<f64> = (0..self.width).map(|j| if self.is_artificial(j) { 1.0 } else { 0.0 }).collect();
        // Bounded below by zero, so this always terminates optimal.
        self.optimize(&cost, true)?;
        let infeasibility: f64 = (0..self.rows)
            .filter(|&i| self.is_artificial(self.basis[i]))
            .map(|i| self.rhs(i).max(0.0))
            .sum();
        let scale = 1.0 + self.r.iter().map(|v| v.abs()).sum::<f64>();
        if infeasibility > self.tol * scale {
            return Ok(false);
        }
        self.drive_out_artificials();
        Ok(true)
    }

    fn drive_out_artificials(&mut self) {
        for i in 0..self.rows {
            if !self.is_artificial(self.basis[i]) {
                continue;
            }
            let mut best = None;
            let mut best_abs = PIVOT_TOL;
            for j in 0..self.real {
                let a = self.at(i, j).abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            match best {
                Some(j) => self.pivot(i, j),
                None => {
                    // Redundant row: clear numerical dust so it never pivots.
                    let stride = self.width + 1;
                    for j in 0..self.real {
                        self.t[i * stride + j] = 0.0;
                    }
                    self.t[i * stride + self.width] = 0.0;
                }
            }
        }
    }

    /// Phase two with the given costs on the real columns.
    pub(crate) fn phase_two(&mut self, c: &[f64]) -> Result<Phase> {
        debug_assert_eq!(c.len(), self.real);
        let mut cost = c.to_vec();
        cost.resize(self.width, 0.0);
        self.optimize(&cost, false)
    }

    fn optimize(&mut self, cost: &[f64], allow_artificial: bool) -> Result<Phase> {
        let stride = self.width + 1;
        let ncols = if allow_artificial { self.width } else { self.real };
        // Reduced costs d_j = c_j - c_B B^{-1} a_j.
        let mut d = cost.to_vec();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * stride..i * stride + self.width];
                for (dj, &a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        loop {
            let entering = if self.bland {
                (0..ncols).find(|&j| d[j] < -self.tol)
            } else {
                let mut best = None;
                let mut most = -self.tol;
                for (j, &dj) in d.iter().enumerate().take(ncols) {
                    if dj < most {
                        most = dj;
                        best = Some(j);
                    }
                }
                best
            };
            let Some(col) = entering else {
                return Ok(Phase::Optimal);
            };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                let replace = match leave {
                    None => true,
                    Some(l) => {
                        if ratio < best_ratio - 1e-12 * (1.0 + best_ratio) {
                            true
                        } else if ratio <= best_ratio + 1e-12 * (1.0 + best_ratio) {
                            if self.bland {
                                self.basis[i] < self.basis[l]
                            } else {
                                a > self.at(l, col)
                            }
                        } else {
                            false
                        }
                    }
                };
                if replace {
                    leave = Some(i);
                    best_ratio = best_ratio.min(ratio);
                }
            }
            let Some(row) = leave else {
                return Ok(Phase::Unbounded);
            };

            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(Error::IterationLimit(self.max_iterations));
            }
            if best_ratio <= self.tol {
                self.degenerate += 1;
                if self.degenerate > self.degenerate_limit {
                    self.bland = true;
                }
            }
            self.pivot(row, col);
            let dc = d[col];
            if dc != 0.0 {
                let prow = &self.t[row * stride..row * stride + self.width];
                for (dj, &a) in d.iter_mut().zip(prow) {
                    *dj -= dc * a;
                }
            }
            d[col] = 0.0;
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let stride = self.width + 1;
        let p = self.t[row * stride + col];
        let (before, rest) = self.t.split_at_mut(row * stride);
        let (prow, after) = rest.split_at_mut(stride);
        for v in prow.iter_mut() {
            *v /= p;
        }
        prow[col] = 1.0;
        let prow: &[f64] = prow;
        let eliminate = |chunk: &mut [f64]| {
            for r in chunk.chunks_exact_mut(stride) {
                let f = r[col];
                if f != 0.0 {
                    for (x, &y) in r.iter_mut().zip(prow.iter()) {
                        *x -= f * y;
                    }
                    r[col] = 0.0;
                }
            }
        };
        eliminate(before);
        eliminate(after);
        self.basis[row] = col;
    }

    /// Columns of the current basis matrix `B` (sign-adjusted system).
    fn basis_matrix(&self) -> Vec<f64> {
        let n = self.rows;
        let mut b = vec![0.0; n * n];
        for (k, &col) in self.basis.iter().enumerate() {
            if col < self.real {
                for i in 0..n {
                    b[i * n + k] = self.m[i * self.real + col];
                }
            } else {
                b[(col - self.real) * n + k] = 1.0;
            }
        }
        b
    }

    /// Current basic solution on the real columns, recomputed from `B z_B = r`.
    pub(crate) fn primal(&self) -> Vec<f64> {
        let n = self.rows;
        let mut z = vec![0.0; self.real];
        let solved = super::dense::solve(self.basis_matrix(), n, self.r.clone());
        for (i, &col) in self.basis.iter().enumerate() {
            if col < self.real {
                let v = match &solved {
                    Some(s) => s[i],
                    None => self.rhs(i),
                };
                z[col] = v.max(0.0);
            }
        }
        z
    }

    /// Simplex multipliers `π` with `Bᵀ π = c_B`, expressed for the
    /// original (unflipped) rows.
    pub(crate) fn duals(&self, c: &[f64]) -> Vec<f64> {
        let n = self.rows;
        let b = self.basis_matrix();
        let mut bt = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                bt[k * n + i] = b[i * n + k];
            }
        }
        let cb: Vec<f64> = self
            .basis
            .iter()
            .map(|&col| if col < self.real { c[col] } else { 0.0 })
            .collect();
        let pi = super::dense::solve(bt, n, cb).unwrap_or_else(|| self.duals_from_tableau(c));
        pi.iter().zip(&self.sign).map(|(p, s)| p * s).collect()
    }

    // Fallback when B is numerically singular: π_i = -d_{artificial i}.
    fn duals_from_tableau(&self, c: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|k| {
                let col = self.real + k;
                (0..self.rows)
                    .map(|i| {
                        let b = self.basis[i];
                        let cb = if b < self.real { c[b] } else { 0.0 };
                        cb * self.at(i, col)
                    })
                    .sum()
            })
            .collect()
    }
}
