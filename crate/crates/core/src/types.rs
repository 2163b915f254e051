//! Parameter and state records shared across the simulator.
//!
//! Everything is expressed in circuit units: frequencies in units of the LC
//! frequency, charge and flux in units of their vacuum fluctuations, and
//! `hbar = C = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{ParamError, Violation};

/// Physical and numerical parameters of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    /// Mean damping rate.
    pub gamma0: f64,
    /// Feedback depth, in `[0, 1]`.
    pub epsilon: f64,
    /// Thermal frequency `k_B T / hbar`.
    pub lambda: f64,
    /// Memory frequency: rate of change of the state variable per unit charge.
    pub nu: f64,
    /// Projection frequency of the continuous charge measurement.
    pub tau: f64,
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub master_seed: u64,
    /// Store every `record_stride`-th integration step.
    pub record_stride: usize,
}

impl SimParams {
    /// Checks every bound and reports all violations at once.
    pub fn validate(self) -> Result<Self, ParamError> {
        let mut violations = Vec::new();
        let mut check = |ok: bool, field: &'static str, message: &str| {
            if !ok {
                violations.push(Violation {
                    field,
                    message: message.to_string(),
                });
            }
        };
        // NaN fails every comparison, so each check is written to reject it.
        check(self.gamma0 >= 0.0 && self.gamma0.is_finite(), "gamma0", "gamma0 must be non-negative");
        check(
            (0.0..=1.0).contains(&self.epsilon),
            "epsilon",
            "epsilon out of [0,1]",
        );
        check(self.lambda > 0.0 && self.lambda.is_finite(), "lambda", "lambda must be positive");
        check(self.nu >= 0.0 && self.nu.is_finite(), "nu", "nu must be non-negative");
        check(self.tau > 0.0 && self.tau.is_finite(), "tau", "tau must be positive");
        check(self.dt > 0.0 && self.dt.is_finite(), "dt", "dt must be positive");
        check(
            self.t_final >= self.dt && self.t_final.is_finite(),
            "t_final",
            "t_final must be at least dt",
        );
        check(self.n_traj >= 1, "n_traj", "n_traj must be at least 1");
        check(
            self.record_stride >= 1,
            "record_stride",
            "record_stride must be at least 1",
        );
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ParamError { violations })
        }
    }

    /// Number of Euler steps covering `[0, t_final]`.
    pub fn n_steps(&self) -> usize {
        // The relative nudge keeps e.g. 18.85 / 1e-3 from flooring to 18849.
        ((self.t_final / self.dt) * (1.0 + 1e-12)).floor() as usize
    }

    /// Number of stored samples, including `t = 0`.
    pub fn n_samples(&self) -> usize {
        self.n_steps() / self.record_stride + 1
    }

    /// Recorded time grid.
    pub fn sample_times(&self) -> Vec<f64> {
        (0..self.n_samples())
            .map(|k| (k * self.record_stride) as f64 * self.dt)
            .collect()
    }
}

/// First and second moments of a Gaussian circuit state plus the memristor
/// state variable: the complete conditioned state of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianState {
    pub mean_phi: f64,
    pub mean_q: f64,
    pub var_phi: f64,
    pub var_q: f64,
    pub cov: f64,
    /// Unwrapped state variable.
    pub mu: f64,
}

impl GaussianState {
    /// Vacuum state: zero means, `V_phi = V_q = 1/2`, no correlation.
    pub fn vacuum() -> Self {
        GaussianState {
            mean_phi: 0.0,
            mean_q: 0.0,
            var_phi: 0.5,
            var_q: 0.5,
            cov: 0.0,
            mu: 0.0,
        }
    }

    /// `V_phi V_q - C^2`, bounded below by 1/4 for physical states.
    pub fn uncertainty_product(&self) -> f64 {
        self.var_phi * self.var_q - self.cov * self.cov
    }

    pub fn has_positive_variances(&self) -> bool {
        self.var_phi > 0.0 && self.var_q > 0.0
    }
}

/// Classical circuit state: flux, charge and state variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalState {
    pub phi: f64,
    pub q: f64,
    pub mu: f64,
}

impl ClassicalState {
    /// Classical initial condition taken from the quantum means.
    pub fn from_means(state: &GaussianState) -> Self {
        ClassicalState {
            phi: state.mean_phi,
            q: state.mean_q,
            mu: state.mu,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.q.is_finite() && self.mu.is_finite()
    }
}

/// Sampled history of one conditioned trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
    pub gammas: Vec<f64>,
    /// Measurement output averaged over each recording interval; one entry
    /// per pair of consecutive samples.
    pub measurement_record: Option<Vec<f64>>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Per-group ensemble means, kept so that nonlinear functionals of the
/// ensemble averages can be given delete-one-group jackknife errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMeans {
    pub n_traj: usize,
    pub e_q: Vec<f64>,
    pub e_gamma: Vec<f64>,
    pub e_gamma_q: Vec<f64>,
}

/// Time-gridded averages over the noise realizations (the unconditioned
/// evolution).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub e_q: Vec<f64>,
    pub e_phi: Vec<f64>,
    pub e_gamma: Vec<f64>,
    pub e_gamma_q: Vec<f64>,
    /// `E[gamma(mu) (<q>^2 + V_q)]`, the power-like second moment.
    pub e_gamma_q2: Vec<f64>,
    pub var_mu: Vec<f64>,
    pub se_q: Vec<f64>,
    pub se_gamma: Vec<f64>,
    pub se_gamma_q: Vec<f64>,
    pub n_traj: usize,
    pub groups: Vec<GroupMeans>,
}

impl EnsembleStats {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// One point on a voltage/current curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub t: f64,
    pub v: f64,
    pub i: f64,
}

/// Part of a curve between consecutive zero crossings of the voltage proxy.
///
/// `first_index..=last_index` are the sample indices owned by the lobe. For a
/// closed curve the lobe spanning the seam wraps around, in which case
/// `first_index > last_index` and `t_start > t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    pub t_start: f64,
    pub t_end: f64,
    pub first_index: usize,
    pub last_index: usize,
    pub signed_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HysteresisCurve {
    pub samples: Vec<CurveSample>,
    pub lobes: Vec<Lobe>,
    pub total_area: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig3() -> SimParams {
        SimParams {
            gamma0: 0.1,
            epsilon: 0.5,
            lambda: 10.0,
            nu: 0.1,
            tau: 0.2,
            dt: 1e-3,
            t_final: 18.85,
            n_traj: 3000,
            master_seed: 1,
            record_stride: 10,
        }
    }

    #[test]
    fn fig3_parameters_validate() {
        assert_eq!(fig3().validate().unwrap(), fig3());
    }

    #[test]
    fn zero_tau_is_rejected() {
        let err = SimParams { tau: 0.0, ..fig3() }.validate().unwrap_err();
        assert_eq!(err.violations.len(), 1);
        assert_eq!(err.violations[0].field, "tau");
        assert!(err.to_string().contains("tau must be positive"));
    }

    #[test]
    fn epsilon_above_one_is_rejected() {
        let err = SimParams { epsilon: 1.2, ..fig3() }.validate().unwrap_err();
        assert!(err.to_string().contains("epsilon out of [0,1]"));
    }

    #[test]
    fn every_violation_is_reported() {
        let bad = SimParams {
            gamma0: -1.0,
            lambda: 0.0,
            dt: 0.0,
            n_traj: 0,
            record_stride: 0,
            epsilon: f64::NAN,
            t_final: -1.0,
            ..fig3()
        };
        let err = bad.validate().unwrap_err();
        let fields: Vec<_> = err.violations.iter().map(|v| v.field).collect();
        assert_eq!(
            fields,
            ["gamma0", "epsilon", "lambda", "dt", "t_final", "n_traj", "record_stride"]
        );
    }

    #[test]
    fn sample_grid() {
        let p = fig3();
        assert_eq!(p.n_steps(), 18850);
        assert_eq!(p.n_samples(), 1886);
        let t = p.sample_times();
        assert_eq!(t[0], 0.0);
        assert!((t[1] - 0.01).abs() < 1e-15);
        let p = SimParams { t_final: 6.0 * std::f64::consts::PI, ..p };
        assert_eq!(p.n_steps(), 18849);
        assert_eq!(p.n_samples(), 1885);
    }

    #[test]
    fn unknown_json_keys_are_rejected() {
        let mut v = serde_json::to_value(fig3()).unwrap();
        v["bogus"] = serde_json::json!(1.0);
        assert!(serde_json::from_value::<SimParams>(v).is_err());
    }

    #[test]
    fn vacuum_is_minimum_uncertainty() {
        assert_eq!(GaussianState::vacuum().uncertainty_product(), 0.25);
    }

    proptest! {
        #[test]
        fn params_round_trip(
            gamma0 in 0.0f64..10.0,
            epsilon in 0.0f64..=1.0,
            lambda in 1e-6f64..1e3,
            tau in 1e-9f64..1e3,
            seed in any::<u64>(),
        ) {
            let p = SimParams { gamma0, epsilon, lambda, tau, master_seed: seed, ..fig3() };
            let text = serde_json::to_string(&p).unwrap();
            let back: SimParams = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(p, back);
        }

        #[test]
        fn state_round_trip(a in any::<f64>(), b in any::<f64>(), c in 1e-300f64..1e300, d in -1e10f64..1e10) {
            prop_assume!(a.is_finite() && b.is_finite());
            let s = GaussianState { mean_phi: a, mean_q: b, var_phi: c, var_q: c * 0.5, cov: d, mu: -d };
            let text = serde_json::to_string(&s).unwrap();
            let back: GaussianState = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(s, back);
        }
    }
}
