//! Boundary (frontier) regression with local polynomials lying above the data.
//!
//! For every evaluation point `x` the estimator fits a polynomial of total
//! degree `β*` that dominates every response in the max-norm window around
//! `x` and has the smallest integral over that window. The fit is a small
//! linear program; its value at `x` is the estimate of the frontier.
//!
//! Modules, bottom-up:
//!
//! - [`basis`]: multi-indices, shifted monomials, Vandermonde rows.
//! - [`window`]: clipped max-norm windows and closed-form monomial integrals.
//! - [`lp`]: dense two-phase simplex with boundedness certificates.
//! - [`estimator`]: the local fit itself, plus dataset I/O.
//! - [`synthetic`]: designs, boundary functions and one-sided error laws.
//! - [`bandwidth`]: bandwidth rules, a Hill tail-index estimator and the
//!   Lepski-type adaptive selection.
//! - [`harness`]: seeded Monte Carlo experiments producing MSE tables and
//!   rate studies.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandwidth;
pub mod basis;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod lp;
pub mod synthetic;
pub mod window;

pub use error::{Error, Result};
