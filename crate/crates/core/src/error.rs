use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("point {0:?} lies outside the unit cube")]
    OutsideUnitCube(Vec<f64>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no data points in the window around {center:?} (h = {bandwidth})")]
    EmptyWindow { center: Vec<f64>, bandwidth: f64 },

    #[error("local LP of degree {degree} is unbounded at {center:?}")]
    Unbounded { center: Vec<f64>, degree: u32 },

    #[error("local LP at {0:?} is infeasible")]
    Infeasible(Vec<f64>),

    #[error("simplex iteration limit ({0}) exceeded")]
    IterationLimit(usize),

    #[error("tail index is undefined: {0}")]
    DegenerateTail(String),

    #[error("insufficient data: need {needed}, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("evaluation point #{index} {point:?}: {source}")]
    AtPoint {
        index: usize,
        point: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("bandwidth ladder step k = {k}: {source}")]
    AtLadderStep {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("cell (beta_star = {beta_star}, n = {n}), replication {replication}: {source}")]
    AtReplication {
        beta_star: u32,
        n: usize,
        replication: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::OutsideUnitCube(_) => "outside_unit_cube",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::EmptyWindow { .. } => "empty_window",
            Error::Unbounded { .. } => "unbounded",
            Error::Infeasible(_) => "infeasible",
            Error::IterationLimit(_) => "iteration_limit",
            Error::DegenerateTail(_) => "degenerate_tail",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::AtPoint { source, .. }
            | Error::AtLadderStep { source, .. }
            | Error::AtReplication { source, .. } => source.kind(),
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn in_unit_cube(x: &[f64]) -> bool {
    x.iter().all(|&c| (0.0..=1.0).contains(&c))
}
