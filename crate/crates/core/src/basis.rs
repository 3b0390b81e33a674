//! Total-degree monomial bases in shifted form.
//!
//! A polynomial of total degree at most `β*` in `q` variables is stored as
//! coefficients of the shifted monomials `(t - x)^j`, where `x` is the
//! expansion center. The basis is ordered graded-lexicographically with the
//! zero index first, so the value at the center is always `coeffs[0]`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Exponent tuple `j = (j_1, ..., j_q)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|j|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `∏_r (t_r - x_r)^{j_r}` with `0^0 = 1`.
    pub fn eval_shifted(&self, t: &[f64], x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), t.len())?;
        check_dim(self.dim(), x.len())?;
        Ok(self
            .0
            .iter()
            .zip(t.iter().zip(x))
            .map(|(&e, (&tr, &xr))| powu(tr - xr, e))
            .product())
    }
}

#[inline]
pub(crate) fn powu(base: f64, exp: u32) -> f64 {
    // powi(0) is 1 for every base, including 0.
    base.powi(exp as i32)
}

/// Free-function form of [`MultiIndex::eval_shifted`].
pub fn eval_shifted_monomial(j: &MultiIndex, t: &[f64], x: &[f64]) -> Result<f64> {
    j.eval_shifted(t, x)
}

/// Complete graded-lex basis of total degree `<= max_degree` in `dim` variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    dim: usize,
    max_degree: u32,
    indices: Vec<MultiIndex>,
}

impl BasisSpec {
    /// Enumerates all multi-indices with `|j| <= max_degree`, degree first and
    /// lexicographically descending within a degree:
    /// `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`.
    pub fn new(dim: usize, max_degree: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let mut indices = Vec::with_capacity(binomial(dim as u64 + max_degree as u64, dim as u64) as usize);
        let mut buf = vec![0u32; dim];
        for degree in 0..=max_degree {
            compositions(degree, 0, &mut buf, &mut indices);
        }
        Ok(BasisSpec {
            dim,
            max_degree,
            indices,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Shifted monomials `(t - x)^j` for every index, in basis order.
    pub fn vandermonde_row(&self, t: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, t.len())?;
        check_dim(self.dim, x.len())?;
        let mut row = vec![0.0; self.len()];
        self.fill_row(t, x, 1.0, &mut row);
        Ok(row)
    }

    /// Writes `((t - x) / scale)^j` into `out`. Dimensions are the caller's
    /// responsibility.
    pub(crate) fn fill_row(&self, t: &[f64], x: &[f64], scale: f64, out: &mut [f64]) {
        let deg = self.max_degree as usize;
        // powers[r * (deg + 1) + e] = ((t_r - x_r) / scale)^e
        let mut powers = vec![1.0; self.dim * (deg + 1)];
        for r in 0..self.dim {
            let d = (t[r] - x[r]) / scale;
            let base = r * (deg + 1);
            for e in 1..=deg {
                powers[base + e] = powers[base + e - 1] * d;
            }
        }
        for (slot, j) in out.iter_mut().zip(&self.indices) {
            *slot = j
                .0
                .iter()
                .enumerate()
                .map(|(r, &e)| powers[r * (deg + 1) + e as usize])
                .product();
        }
    }
}

/// Free-function form of [`BasisSpec::new`].
pub fn enumerate_basis(dim: usize, beta_star: u32) -> Result<BasisSpec> {
    BasisSpec::new(dim, beta_star)
}

fn compositions(remaining: u32, pos: usize, buf: &mut [u32], out: &mut Vec<MultiIndex>) {
    if pos == buf.len() - 1 {
        buf[pos] = remaining;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for e in (0..=remaining).rev() {
        buf[pos] = e;
        compositions(remaining - e, pos + 1, buf, out);
    }
    buf[pos] = 0;
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Coefficients of a polynomial in the shifted monomial basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyCoeffs {
    basis: BasisSpec,
    coeffs: Vec<f64>,
}

impl PolyCoeffs {
    pub fn new(basis: BasisSpec, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::LengthMismatch {
                what: "coefficient vector",
                expected: basis.len(),
                got: coeffs.len(),
            });
        }
        Ok(PolyCoeffs { basis, coeffs })
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Value at the expansion center.
    pub fn center_value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `p(t) = Σ_j b_j (t - x)^j`.
    pub fn eval(&self, t: &[f64], x: &[f64]) -> Result<f64> {
        let row = self.basis.vandermonde_row(t, x)?;
        Ok(row.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum())
    }

    /// Exact gradient of `p` at `t`, by lowering each exponent.
    pub fn gradient(&self, t: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let q = self.basis.dim;
        check_dim(q, t.len())?;
        check_dim(q, x.len())?;
        let mut grad = vec![0.0; q];
        for (j, &b) in self.basis.indices.iter().zip(&self.coeffs) {
            if b == 0.0 {
                continue;
            }
            for (r, g) in grad.iter_mut().enumerate() {
                let er = j.0[r];
                if er == 0 {
                    continue;
                }
                let mut term = b * er as f64 * powu(t[r] - x[r], er - 1);
                for s in (0..q).filter(|&s| s != r) {
                    term *= powu(t[s] - x[s], j.0[s]);
                }
                *g += term;
            }
        }
        Ok(grad)
    }
}

pub fn eval_poly(coeffs: &PolyCoeffs, t: &[f64], x: &[f64]) -> Result<f64> {
    coeffs.eval(t, x)
}

pub fn poly_gradient(coeffs: &PolyCoeffs, t: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    coeffs.gradient(t, x)
}
