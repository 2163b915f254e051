//! Parameter sets of the published hysteresis runs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::types::{GaussianState, SimParams};

/// One oscillation period of the undamped circuit.
pub const PERIOD: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Weak measurement, `tau = 0.005`.
    Fig3a,
    /// Near-optimal measurement, `tau = 0.2`.
    Fig3b,
    /// Strong measurement, `tau = 4`.
    Fig3c,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Fig3a, Preset::Fig3b, Preset::Fig3c];

    pub fn tau(self) -> f64 {
        match self {
            Preset::Fig3a => 0.005,
            Preset::Fig3b => 0.2,
            Preset::Fig3c => 4.0,
        }
    }

    /// `gamma0 = 0.1, epsilon = 0.5, lambda = 10, nu = 0.1`, `dt = 1e-3`,
    /// 3000 trajectories over three periods.
    pub fn params(self) -> SimParams {
        SimParams {
            gamma0: 0.1,
            epsilon: 0.5,
            lambda: 10.0,
            nu: 0.1,
            tau: self.tau(),
            dt: 1e-3,
            t_final: 3.0 * PERIOD,
            n_traj: 3000,
            master_seed: 1,
            record_stride: 10,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::Fig3c => "fig3c",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset '{s}' (expected fig3a, fig3b or fig3c)"))
    }
}

/// `<phi> = 20`, `<q> = 0`, `V_phi = V_q = 1/2`, `C = 0`, `mu = 0`.
pub fn initial_state() -> GaussianState {
    GaussianState {
        mean_phi: 20.0,
        ..GaussianState::vacuum()
    }
}
