use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::types::{EnsembleStats, SimParams, TrajectoryRecord};

/// Linear interpolation of the time at which `y` first reaches `level`.
fn first_reaching(times: &[f64], y: &[f64], level: f64) -> Option<f64> {
    let k = y.iter().position(|&v| v >= level)?;
    if k == 0 {
        return Some(times[0]);
    }
    let (t0, t1, y0, y1) = (times[k - 1], times[k], y[k - 1], y[k]);
    Some(t0 + (level - y0) / (y1 - y0) * (t1 - t0))
}

/// Earliest time at which the ensemble spread of `mu` reaches `2 pi`, after
/// which the periodic damping law averages out to `gamma0`.
pub fn collapse_time(stats: &EnsembleStats) -> Option<f64> {
    let spread: Vec<f64> = stats.var_mu.iter().map(|v| v.sqrt()).collect();
    first_reaching(&stats.times, &spread, 2.0 * PI)
}

/// Ratios of the accumulated diffusion to `min(q_typical^2, 4 pi^2)` over a
/// horizon `t_c`; memory survives while all of them are small.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryWindowReport {
    pub scale: f64,
    /// Charge back-action: `8 tau V_q t_c / m`.
    pub back_action_q: f64,
    /// Flux back-action: `8 tau |C| t_c / m`.
    pub back_action_phi: f64,
    /// Measurement noise: `t_c / (8 tau m)`.
    pub measurement_noise: f64,
    pub threshold: f64,
    pub satisfied: [bool; 3],
}

impl MemoryWindowReport {
    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|&s| s)
    }
}

pub const DEFAULT_WINDOW_THRESHOLD: f64 = 0.1;

pub fn memory_window_check(params: &SimParams, q_typical: f64, t_c: f64, vq: f64, cov: f64) -> MemoryWindowReport {
    memory_window_check_with_threshold(params, q_typical, t_c, vq, cov, DEFAULT_WINDOW_THRESHOLD)
}

pub fn memory_window_check_with_threshold(
    params: &SimParams,
    q_typical: f64,
    t_c: f64,
    vq: f64,
    cov: f64,
    threshold: f64,
) -> MemoryWindowReport {
    let tau = params.tau;
    let m = (q_typical * q_typical).min(4.0 * PI * PI);
    let r = [
        8.0 * tau * vq * t_c / m,
        8.0 * tau * cov.abs() * t_c / m,
        t_c / (8.0 * tau * m),
    ];
    MemoryWindowReport {
        scale: m,
        back_action_q: r[0],
        back_action_phi: r[1],
        measurement_noise: r[2],
        threshold,
        satisfied: r.map(|x| x <= threshold),
    }
}

/// Range `(2 / s, 4 s)` of projection frequencies giving localised phase
/// space trajectories, with the typical action `s ≈ q_typical^2`.
pub fn localization_window(q_typical: f64) -> (f64, f64) {
    let s = q_typical * q_typical;
    (2.0 / s, 4.0 * s)
}

/// Times at which the squeezing switches between charge and flux, i.e. where
/// `V_q - V_phi` changes sign (linearly interpolated).
pub fn squeezing_crossings(record: &TrajectoryRecord) -> Vec<f64> {
    let diff: Vec<f64> = record.states.iter().map(|s| s.var_q - s.var_phi).collect();
    sign_change_times(&record.times, &diff)
}

pub(crate) fn sign_change_times(times: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut last: Option<usize> = None;
    for k in 0..y.len() {
        if y[k] == 0.0 {
            continue;
        }
        if let Some(j) = last {
            if y[j].signum() != y[k].signum() {
                out.push(if j + 1 == k {
                    times[j] + y[j] / (y[j] - y[k]) * (times[k] - times[j])
                } else {
                    times[j + 1]
                });
            }
        }
        last = Some(k);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{integrate_trajectory, NoiseStream};
    use crate::types::GaussianState;
    use approx::assert_relative_eq;

    fn params(tau: f64) -> SimParams {
        SimParams {
            gamma0: 0.1,
            epsilon: 0.5,
            lambda: 10.0,
            nu: 0.1,
            tau,
            dt: 1e-3,
            t_final: 6.0 * PI,
            n_traj: 3000,
            master_seed: 1,
            record_stride: 10,
        }
    }

    #[test]
    fn window_at_optimal_tau() {
        let r = memory_window_check(&params(0.2), 20.0, 2.0 * PI, 1.53, -0.175);
        assert_relative_eq!(r.scale, 4.0 * PI * PI);
        assert_relative_eq!(r.back_action_q, 1.6 * 1.53 * 2.0 * PI / (4.0 * PI * PI), epsilon = 1e-14);
        assert!((r.back_action_q - 0.39).abs() < 0.005);
        assert!(!r.satisfied[0]);
        assert!(!r.all_satisfied());
    }

    #[test]
    fn window_vanishes_with_horizon() {
        let r = memory_window_check(&params(0.2), 20.0, 1e-9, 1.53, -0.175);
        assert!(r.all_satisfied());
    }

    #[test]
    fn strong_measurement_window() {
        let st = crate::analysis::stationary_moments(0.1, 10.0, 4.0);
        let r = memory_window_check(&params(4.0), 20.0, 2.0 * PI, st.vq_st, st.c_st);
        assert_relative_eq!(r.measurement_noise, 2.0 * PI / (32.0 * 4.0 * PI * PI), epsilon = 1e-14);
        assert!((r.measurement_noise - 0.005).abs() < 1e-4);
        assert!(r.satisfied[2]);
        assert!(r.back_action_q > 1.0);
    }

    #[test]
    fn localization_bounds() {
        assert_eq!(localization_window(20.0), (0.005, 1600.0));
        assert_eq!(localization_window(1.0), (2.0, 4.0));
        assert_eq!(localization_window(20.0).0, 0.005);
    }

    #[test]
    fn synthetic_squeezing_crossings() {
        let n = 20_001;
        let times: Vec<f64> = (0..n).map(|k| 4.0 * PI * k as f64 / (n - 1) as f64).collect();
        let states = times
            .iter()
            .map(|t| GaussianState {
                var_q: 0.4 + 0.2 * t.sin(),
                ..GaussianState::vacuum()
            })
            .collect();
        let rec = TrajectoryRecord {
            gammas: vec![0.1; n],
            times,
            states,
            measurement_record: None,
        };
        // V_q = V_phi where sin t = 1/2.
        let expected = [PI / 6.0, 5.0 * PI / 6.0, 13.0 * PI / 6.0, 17.0 * PI / 6.0];
        let got = squeezing_crossings(&rec);
        assert_eq!(got.len(), 4);
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-6, "{g} vs {e}");
        }
    }

    #[test]
    fn shifted_sine_crosses_at_multiples_of_pi() {
        let times: Vec<f64> = (0..10_001).map(|k| 4.0 * PI * k as f64 / 10_000.0 + 0.1).collect();
        let y: Vec<f64> = times.iter().map(|t| 0.2 * t.sin()).collect();
        let got = sign_change_times(&times, &y);
        assert_eq!(got.len(), 4);
        for (k, g) in got.iter().enumerate() {
            assert!((g - (k + 1) as f64 * PI).abs() < 1e-6);
        }
    }

    #[test]
    fn equal_variances_never_cross() {
        let rec = TrajectoryRecord {
            times: vec![0.0, 1.0, 2.0],
            states: vec![GaussianState::vacuum(); 3],
            gammas: vec![0.1; 3],
            measurement_record: None,
        };
        assert!(squeezing_crossings(&rec).is_empty());
    }

    #[test]
    fn low_temperature_preset_oscillates_in_squeezing() {
        // At tau = 0.5 the measurement pins the variances before they rotate;
        // tau = 0.05 leaves the free rotation (crossings every ~pi/2) intact.
        let p = SimParams {
            gamma0: 0.01,
            lambda: 0.5,
            tau: 0.05,
            t_final: 4.0 * PI,
            ..params(0.05)
        };
        let init = GaussianState {
            var_q: 0.3,
            var_phi: 0.9,
            ..GaussianState::vacuum()
        };
        let rec = integrate_trajectory(&p, &init, &mut NoiseStream::new(1, 0)).unwrap();
        let got = squeezing_crossings(&rec);
        assert!(got.len() >= 2, "{got:?}");
        assert!((got[0] - 0.883).abs() < 0.01 && (got[1] - 2.417).abs() < 0.01, "{got:?}");
        let pinned = SimParams { tau: 0.5, ..p };
        let rec = integrate_trajectory(&pinned, &init, &mut NoiseStream::new(1, 0)).unwrap();
        assert!(squeezing_crossings(&rec).is_empty());
    }

    #[test]
    fn collapse_time_interpolates() {
        let stats = EnsembleStats {
            times: vec![0.0, 1.0, 2.0],
            var_mu: vec![0.0, 4.0 * PI * PI - 1.0, 4.0 * PI * PI + 1.0],
            e_q: vec![0.0; 3],
            e_phi: vec![0.0; 3],
            e_gamma: vec![0.1; 3],
            e_gamma_q: vec![0.0; 3],
            e_gamma_q2: vec![0.0; 3],
            se_q: vec![0.0; 3],
            se_gamma: vec![0.0; 3],
            se_gamma_q: vec![0.0; 3],
            n_traj: 2,
            groups: vec![],
        };
        let t = collapse_time(&stats).unwrap();
        let (a, b) = ((4.0 * PI * PI - 1.0f64).sqrt(), (4.0 * PI * PI + 1.0f64).sqrt());
        assert_relative_eq!(t, 1.0 + (2.0 * PI - a) / (b - a), epsilon = 1e-12);
        let frozen = EnsembleStats { var_mu: vec![0.0; 3], ..stats };
        assert_eq!(collapse_time(&frozen), None);
    }
}
