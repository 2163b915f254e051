//! Time stepping: explicit Euler-Maruyama for the conditioned moment
//! equations and classical RK4 for the deterministic circuit.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    classical_rhs_with, diffusion, drift_at_rate, CosineDamping, DampingLaw,
};
use crate::error::SimError;
use crate::types::{ClassicalState, GaussianState, SimParams, TrajectoryRecord};

/// Source of independent standard normal variates `G`, with `dW = G sqrt(dt)`.
pub trait GaussianSource {
    fn next_gaussian(&mut self) -> f64;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` under `master_seed`.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index))
}

/// Per-trajectory noise: a ChaCha8 generator keyed by the derived seed and
/// placed on stream `trajectory_index`, so streams never overlap and do not
/// depend on the order in which trajectories are run.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    trajectory_index: u64,
    derived_seed: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(master_seed: u64, trajectory_index: u64) -> Self {
        let derived_seed = derive_seed(master_seed, trajectory_index);
        let mut rng = ChaCha8Rng::seed_from_u64(derived_seed);
        rng.set_stream(trajectory_index);
        NoiseStream {
            trajectory_index,
            derived_seed,
            rng,
        }
    }

    pub fn trajectory_index(&self) -> u64 {
        self.trajectory_index
    }

    pub fn derived_seed(&self) -> u64 {
        self.derived_seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

impl GaussianSource for NoiseStream {
    #[inline]
    fn next_gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// Aggregates `factor` consecutive draws of a finer stream into one variate:
/// `G = (G_1 + ... + G_factor) / sqrt(factor)`.
///
/// Driving a step of size `factor * h` with this source reproduces the same
/// Brownian path as `factor` steps of size `h` on the inner source.
#[derive(Debug, Clone)]
pub struct CoarsenedNoise<S> {
    inner: S,
    factor: usize,
    scale: f64,
}

impl<S: GaussianSource> CoarsenedNoise<S> {
    pub fn new(inner: S, factor: usize) -> Self {
        assert!(factor >= 1, "coarsening factor must be at least 1");
        CoarsenedNoise {
            inner,
            factor,
            scale: 1.0 / (factor as f64).sqrt(),
        }
    }
}

impl<S: GaussianSource> GaussianSource for CoarsenedNoise<S> {
    #[inline]
    fn next_gaussian(&mut self) -> f64 {
        if self.factor == 1 {
            return self.inner.next_gaussian();
        }
        let mut sum = 0.0;
        for _ in 0..self.factor {
            sum += self.inner.next_gaussian();
        }
        sum * self.scale
    }
}

impl<S: GaussianSource + ?Sized> GaussianSource for &mut S {
    fn next_gaussian(&mut self) -> f64 {
        (**self).next_gaussian()
    }
}

/// Replays a fixed list of variates; handy for instrumenting single steps.
#[derive(Debug, Clone)]
pub struct FixedNoise {
    values: Vec<f64>,
    pos: usize,
}

impl FixedNoise {
    pub fn new(values: Vec<f64>) -> Self {
        FixedNoise { values, pos: 0 }
    }
}

impl GaussianSource for FixedNoise {
    fn next_gaussian(&mut self) -> f64 {
        let v = self.values[self.pos % self.values.len()];
        self.pos += 1;
        v
    }
}

/// Applies one Euler-Maruyama update with increment `dw` and damping rate
/// `gamma` (evaluated at the pre-step state). No positivity check.
#[inline]
fn advance(state: &GaussianState, params: &SimParams, gamma: f64, dw: f64) -> GaussianState {
    let dt = params.dt;
    let a = drift_at_rate(state, params, gamma);
    let b = diffusion(state, params);
    GaussianState {
        mean_phi: state.mean_phi + a.d_mean_phi * dt + b.g_mean_phi * dw,
        mean_q: state.mean_q + a.d_mean_q * dt + b.g_mean_q * dw,
        var_phi: state.var_phi + a.d_var_phi * dt,
        var_q: state.var_q + a.d_var_q * dt,
        cov: state.cov + a.d_cov * dt,
        mu: state.mu + a.d_mu * dt + b.g_mu * dw,
    }
}

pub fn euler_step_with<L: DampingLaw>(
    state: &GaussianState,
    params: &SimParams,
    law: &L,
    gauss: f64,
) -> Result<GaussianState, SimError> {
    let dw = gauss * params.dt.sqrt();
    let next = advance(state, params, law.rate(state.mu), dw);
    if next.has_positive_variances() {
        Ok(next)
    } else {
        Err(SimError::NonPositiveVariance {
            time: params.dt,
            var_phi: next.var_phi,
            var_q: next.var_q,
        })
    }
}

/// One Euler-Maruyama step driven by the standard normal variate `gauss`.
///
/// `<phi>`, `<q>` and `mu` all receive the same `dW = gauss * sqrt(dt)`. On
/// failure the reported time is the step length, i.e. the time elapsed since
/// `state`.
pub fn euler_step(state: &GaussianState, params: &SimParams, gauss: f64) -> Result<GaussianState, SimError> {
    euler_step_with(state, params, &CosineDamping::from_params(params), gauss)
}

/// Measurement output `M = <q> + dW / (sqrt(8 tau) dt)` for the step that
/// starts at `state_before` and uses increment `dw`.
pub fn measurement_record(state_before: &GaussianState, dw: f64, params: &SimParams) -> f64 {
    state_before.mean_q + dw / ((8.0 * params.tau).sqrt() * params.dt)
}

const UNCERTAINTY_BOUND: f64 = 0.25;

/// Integrates one trajectory and calls `visit(sample_index, state, gamma,
/// record_mean)` at every stored sample. `record_mean` is the measurement
/// output averaged over the interval ending at that sample (0 for the first).
pub(crate) fn run_path<L, S, F>(
    params: &SimParams,
    init: &GaussianState,
    law: &L,
    noise: &mut S,
    mut visit: F,
) -> Result<(), SimError>
where
    L: DampingLaw,
    S: GaussianSource,
    F: FnMut(usize, &GaussianState, f64, f64),
{
    if !init.has_positive_variances() {
        return Err(SimError::InvalidInitialState {
            var_phi: init.var_phi,
            var_q: init.var_q,
        });
    }
    let n_steps = params.n_steps();
    let stride = params.record_stride;
    let sqrt_dt = params.dt.sqrt();
    let record_scale = 1.0 / (8.0 * params.tau).sqrt();
    let interval = stride as f64 * params.dt;

    let mut state = *init;
    let mut gamma = law.rate(state.mu);
    let mut record_integral = 0.0;
    let mut warned = false;
    visit(0, &state, gamma, 0.0);

    for step in 1..=n_steps {
        let dw = noise.next_gaussian() * sqrt_dt;
        record_integral += state.mean_q * params.dt + dw * record_scale;
        state = advance(&state, params, gamma, dw);
        let time = step as f64 * params.dt;
        if !state.has_positive_variances() {
            return Err(SimError::NonPositiveVariance {
                time,
                var_phi: state.var_phi,
                var_q: state.var_q,
            });
        }
        if !warned && state.uncertainty_product() < UNCERTAINTY_BOUND * (1.0 - 1e-9) {
            log::warn!(
                "uncertainty product {} below 1/4 at t = {}",
                state.uncertainty_product(),
                time
            );
            warned = true;
        }
        gamma = law.rate(state.mu);
        if step % stride == 0 {
            visit(step / stride, &state, gamma, record_integral / interval);
            record_integral = 0.0;
        }
    }
    Ok(())
}

pub fn integrate_trajectory_with<L: DampingLaw, S: GaussianSource>(
    params: &SimParams,
    init: &GaussianState,
    law: &L,
    noise: &mut S,
) -> Result<TrajectoryRecord, SimError> {
    let params = params.validate()?;
    let n = params.n_samples();
    let mut times = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut gammas = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n.saturating_sub(1));
    run_path(&params, init, law, noise, |k, s, g, m| {
        times.push((k * params.record_stride) as f64 * params.dt);
        states.push(*s);
        gammas.push(g);
        if k > 0 {
            records.push(m);
        }
    })?;
    Ok(TrajectoryRecord {
        times,
        states,
        gammas,
        measurement_record: Some(records),
    })
}

/// Integrates one conditioned trajectory under the cosine damping law.
///
/// The record holds `n_steps / record_stride + 1` samples; the integration
/// step is always `params.dt` regardless of the stride.
pub fn integrate_trajectory<S: GaussianSource>(
    params: &SimParams,
    init: &GaussianState,
    noise: &mut S,
) -> Result<TrajectoryRecord, SimError> {
    integrate_trajectory_with(params, init, &CosineDamping::from_params(params), noise)
}

fn rk4_step_with<L: DampingLaw>(state: &ClassicalState, params: &SimParams, law: &L) -> ClassicalState {
    let h = params.dt;
    let shift = |s: &ClassicalState, k: &ClassicalState, c: f64| ClassicalState {
        phi: s.phi + c * k.phi,
        q: s.q + c * k.q,
        mu: s.mu + c * k.mu,
    };
    let k1 = classical_rhs_with(state, params, law);
    let k2 = classical_rhs_with(&shift(state, &k1, 0.5 * h), params, law);
    let k3 = classical_rhs_with(&shift(state, &k2, 0.5 * h), params, law);
    let k4 = classical_rhs_with(&shift(state, &k3, h), params, law);
    ClassicalState {
        phi: state.phi + h / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi),
        q: state.q + h / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q),
        mu: state.mu + h / 6.0 * (k1.mu + 2.0 * k2.mu + 2.0 * k3.mu + k4.mu),
    }
}

/// Classical fourth-order Runge-Kutta step of length `params.dt`.
pub fn rk4_step_classical(state: &ClassicalState, params: &SimParams) -> ClassicalState {
    rk4_step_with(state, params, &CosineDamping::from_params(params))
}

/// One stored point of a classical run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSample {
    pub t: f64,
    pub state: ClassicalState,
    pub gamma: f64,
    /// Memristor current `gamma(mu) q`.
    pub i_m: f64,
}

/// Deterministic classical run on the same time grid as the quantum
/// ensembles.
pub fn integrate_classical(params: &SimParams, init: &ClassicalState) -> Vec<ClassicalSample> {
    let law = CosineDamping::from_params(params);
    let sample = |t: f64, s: &ClassicalState| {
        let gamma = law.rate(s.mu);
        ClassicalSample {
            t,
            state: *s,
            gamma,
            i_m: gamma * s.q,
        }
    };
    let mut out = Vec::with_capacity(params.n_samples());
    let mut state = *init;
    out.push(sample(0.0, &state));
    for step in 1..=params.n_steps() {
        state = rk4_step_with(&state, params, &law);
        if step % params.record_stride == 0 {
            out.push(sample(step as f64 * params.dt, &state));
        }
    }
    out
}
