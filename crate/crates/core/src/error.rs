use std::fmt;

use thiserror::Error;

/// A single violated parameter bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

/// All bounds violated by a parameter set.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParamError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let messages: Vec<&str> = self.violations.iter().map(|v| v.message.as_str()).collect();
        write!(f, "invalid parameters: {}", messages.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Params(#[from] ParamError),

    #[error("initial state must have positive variances (V_phi = {var_phi}, V_q = {var_q})")]
    InvalidInitialState { var_phi: f64, var_q: f64 },

    /// The step produced a non-positive variance; usually `dt` is too large.
    #[error("non-positive variance at t = {time} (V_phi = {var_phi}, V_q = {var_q}); reduce dt")]
    NonPositiveVariance { time: f64, var_phi: f64, var_q: f64 },

    #[error("ensemble requires ≥ 2 trajectories")]
    EnsembleTooSmall,

    #[error("{} of {n_traj} trajectories failed; first: trajectory {}: {}", failures.len(), failures[0].0, failures[0].1)]
    TrajectoriesFailed {
        n_traj: usize,
        failures: Vec<(usize, SimError)>,
    },

    #[error("could not build worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("invalid bracket [{lo}, {hi}]: need 0 < lo < hi")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("need ≥ 2 step sizes")]
    TooFewStepSizes,

    #[error("invalid step sizes: {0}")]
    InvalidStepSizes(String),

    #[error("time grids do not match")]
    GridMismatch,

    #[error(transparent)]
    Sim(#[from] SimError),
}
