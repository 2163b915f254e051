//! Step-size convergence of the ensemble damping rate.
//!
//! All runs share one Brownian path per trajectory: the finest step draws
//! from the trajectory's noise stream directly and coarser steps sum the
//! corresponding fine draws. The reported gaps are then discretisation error
//! rather than sampling noise.

use serde::{Deserialize, Serialize};

use crate::ensemble::{run_ensemble_coupled, EnsembleOptions};
use crate::error::AnalysisError;
use crate::types::{EnsembleStats, GaussianState, SimParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub dts: Vec<f64>,
    /// `max_t |e_gamma^{dt}(t) - e_gamma^{dt_min}(t)|`, one per step size
    /// (zero for the reference).
    pub max_gamma_gaps: Vec<f64>,
    /// Spacing of the common comparison grid.
    pub sample_interval: f64,
    /// Gaps never grow as the step shrinks.
    pub monotone: bool,
}

fn integer_ratio(num: f64, den: f64) -> Option<usize> {
    let r = num / den;
    let k = r.round();
    (k >= 1.0 && (r - k).abs() <= 1e-9 * k).then_some(k as usize)
}

/// Runs one ensemble per step size (descending) and compares `e_gamma` with
/// the finest run on a grid of spacing `dts[0] * params.record_stride`.
pub fn convergence_study(
    params: &SimParams,
    init: &GaussianState,
    dts: &[f64],
    options: &EnsembleOptions,
) -> Result<ConvergenceReport, AnalysisError> {
    if dts.len() < 2 {
        return Err(AnalysisError::TooFewStepSizes);
    }
    if dts.iter().any(|d| d.is_nan() || *d <= 0.0) || dts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(AnalysisError::InvalidStepSizes("step sizes must be positive and strictly descending".into()));
    }
    let params = params.validate().map_err(crate::error::SimError::from)?;
    let dt_min = *dts.last().expect("len checked");
    let sample_interval = dts[0] * params.record_stride as f64;

    let mut runs: Vec<EnsembleStats> = Vec::with_capacity(dts.len());
    for &dt in dts {
        let factor = integer_ratio(dt, dt_min).ok_or_else(|| {
            AnalysisError::InvalidStepSizes(format!("{dt} is not an integer multiple of {dt_min}"))
        })?;
        let stride = integer_ratio(sample_interval, dt).ok_or_else(|| {
            AnalysisError::InvalidStepSizes(format!("{dt} does not divide the sample interval {sample_interval}"))
        })?;
        let p = SimParams {
            dt,
            record_stride: stride,
            ..params
        };
        runs.push(run_ensemble_coupled(&p, init, options, factor)?);
    }

    let reference = runs.last().expect("at least two runs");
    let max_gamma_gaps: Vec<f64> = runs
        .iter()
        .map(|run| {
            let n = run.len().min(reference.len());
            (0..n)
                .map(|k| (run.e_gamma[k] - reference.e_gamma[k]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let monotone = max_gamma_gaps.windows(2).all(|w| w[1] <= w[0]);
    Ok(ConvergenceReport {
        dts: dts.to_vec(),
        max_gamma_gaps,
        sample_interval,
        monotone,
    })
}
