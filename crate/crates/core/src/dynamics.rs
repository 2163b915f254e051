//! Right-hand sides of the conditioned moment equations and of the classical
//! circuit.
//!
//! For a Gaussian state `(<phi>, <q>, V_phi, V_q, C)` under the quadratic
//! Hamiltonian `H = (q^2 + phi^2) / 2`, state-dependent Caldeira-Leggett
//! damping `gamma(mu)` and continuous charge measurement at projection
//! frequency `tau`, the Itô equations are
//!
//! ```text
//! d<phi> = <q> dt                         + sqrt(8 tau) C   dW
//! d<q>   = (-<phi> - 2 gamma <q>) dt      + sqrt(8 tau) V_q dW
//! dV_phi = (2 C + 2 tau (1 - 4 C^2)) dt
//! dV_q   = (-2 C - 4 gamma (V_q - lambda) - 8 tau V_q^2) dt
//! dC     = ((V_q - V_phi) - C (2 gamma + 8 tau V_q)) dt
//! dmu    = nu (<q> dt + dW / sqrt(8 tau))
//! ```
//!
//! with a single Wiener increment `dW` shared by all stochastic terms.

use crate::types::{ClassicalState, GaussianState, SimParams};

/// Conductance law mapping the state variable to a damping rate.
pub trait DampingLaw {
    fn rate(&self, mu: f64) -> f64;
}

/// `gamma(mu) = gamma0 (1 + epsilon cos mu)`, a Josephson-junction-like
/// memconductance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineDamping {
    pub gamma0: f64,
    pub epsilon: f64,
}

impl CosineDamping {
    pub fn from_params(params: &SimParams) -> Self {
        CosineDamping {
            gamma0: params.gamma0,
            epsilon: params.epsilon,
        }
    }
}

impl DampingLaw for CosineDamping {
    #[inline]
    fn rate(&self, mu: f64) -> f64 {
        damping_rate(mu, self.gamma0, self.epsilon)
    }
}

impl<F: Fn(f64) -> f64> DampingLaw for F {
    fn rate(&self, mu: f64) -> f64 {
        self(mu)
    }
}

/// `gamma0 (1 + epsilon cos mu)`; lies in `[gamma0 (1 - epsilon), gamma0 (1 + epsilon)]`.
#[inline]
pub fn damping_rate(mu: f64, gamma0: f64, epsilon: f64) -> f64 {
    gamma0 * (1.0 + epsilon * mu.cos())
}

/// Deterministic rates of the conditioned state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftIncrement {
    pub d_mean_phi: f64,
    pub d_mean_q: f64,
    pub d_var_phi: f64,
    pub d_var_q: f64,
    pub d_cov: f64,
    pub d_mu: f64,
}

/// Coefficients of the shared increment `dW`. The second moments carry none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionCoefficients {
    pub g_mean_phi: f64,
    pub g_mean_q: f64,
    pub g_mu: f64,
}

/// Drift with the damping rate supplied by the caller.
#[inline]
pub fn drift_at_rate(state: &GaussianState, params: &SimParams, gamma: f64) -> DriftIncrement {
    let tau = params.tau;
    let c = state.cov;
    let vq = state.var_q;
    DriftIncrement {
        d_mean_phi: state.mean_q,
        d_mean_q: -state.mean_phi - 2.0 * gamma * state.mean_q,
        d_var_phi: 2.0 * c + 2.0 * tau * (1.0 - 4.0 * c * c),
        d_var_q: -2.0 * c - 4.0 * gamma * (vq - params.lambda) - 8.0 * tau * vq * vq,
        d_cov: (vq - state.var_phi) - c * (2.0 * gamma + 8.0 * tau * vq),
        d_mu: params.nu * state.mean_q,
    }
}

pub fn drift_with<L: DampingLaw>(state: &GaussianState, params: &SimParams, law: &L) -> DriftIncrement {
    drift_at_rate(state, params, law.rate(state.mu))
}

/// Drift under the cosine damping law.
pub fn drift(state: &GaussianState, params: &SimParams) -> DriftIncrement {
    drift_with(state, params, &CosineDamping::from_params(params))
}

#[inline]
pub fn diffusion(state: &GaussianState, params: &SimParams) -> DiffusionCoefficients {
    let s = (8.0 * params.tau).sqrt();
    DiffusionCoefficients {
        g_mean_phi: s * state.cov,
        g_mean_q: s * state.var_q,
        g_mu: params.nu / s,
    }
}

/// Rates `(dphi/dt, dq/dt, dmu/dt)` of the classical circuit.
pub fn classical_rhs_with<L: DampingLaw>(state: &ClassicalState, params: &SimParams, law: &L) -> ClassicalState {
    let gamma = law.rate(state.mu);
    ClassicalState {
        phi: state.q,
        q: -state.phi - 2.0 * gamma * state.q,
        mu: params.nu * state.q,
    }
}

pub fn classical_rhs(state: &ClassicalState, params: &SimParams) -> ClassicalState {
    classical_rhs_with(state, params, &CosineDamping::from_params(params))
}

/// `<H> = (<q>^2 + <phi>^2 + V_q + V_phi) / 2`.
pub fn mean_energy(state: &GaussianState) -> f64 {
    0.5 * (state.mean_q * state.mean_q + state.mean_phi * state.mean_phi + state.var_q + state.var_phi)
}
