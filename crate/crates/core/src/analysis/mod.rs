//! Hysteresis loops, collapse and noise diagnostics, stationary moments and
//! step-size convergence.

mod convergence;
mod diagnostics;
mod hysteresis;
mod stationary;

pub use convergence::{convergence_study, ConvergenceReport};
pub use diagnostics::{
    collapse_time, localization_window, memory_window_check, memory_window_check_with_threshold,
    squeezing_crossings, MemoryWindowReport, DEFAULT_WINDOW_THRESHOLD,
};
pub use hysteresis::{
    classical_agreement, classical_curve, ensemble_loop_area, hysteresis_curve, hysteresis_from_samples,
    hysteresis_from_series, loop_area_first_period, relative_curve_distance, restrict_to_period, shoelace_area,
    zero_crossings, AgreementReport, AgreementTolerance, AreaEstimate, Crossing,
};
pub use stationary::{
    golden_section_min, log_space, noise_sum, optimize_tau, stationary_moments, StationaryMoments, TauOptReport,
    DEFAULT_BRACKET,
};

use serde::{Deserialize, Serialize};

use crate::ensemble::factorization_deviation;
use crate::types::EnsembleStats;

/// Factorisation deviation at one zero crossing of `E[<q>]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingDeviation {
    pub time: f64,
    pub delta: f64,
    pub se: f64,
}

/// `delta_q` and its error interpolated to every zero crossing of `E[<q>]`.
/// Non-zero values mean the unconditioned loop is not pinched at the origin.
pub fn deviation_at_crossings(stats: &EnsembleStats) -> Vec<CrossingDeviation> {
    let dev = factorization_deviation(stats);
    let lerp = |y: &[f64], t: f64| -> f64 {
        let k = stats.times.partition_point(|&s| s <= t);
        if k == 0 {
            return y[0];
        }
        if k >= y.len() {
            return y[y.len() - 1];
        }
        let (t0, t1) = (stats.times[k - 1], stats.times[k]);
        y[k - 1] + (t - t0) / (t1 - t0) * (y[k] - y[k - 1])
    };
    diagnostics::sign_change_times(&stats.times, &stats.e_q)
        .into_iter()
        .map(|time| CrossingDeviation {
            time,
            delta: lerp(&dev.delta, time),
            se: lerp(&dev.se, time),
        })
        .collect()
}
