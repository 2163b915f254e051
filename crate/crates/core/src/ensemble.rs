//! Ensembles of conditioned trajectories and their reduction to the
//! unconditioned averages.
//!
//! Trajectories are split into at most [`MAX_GROUPS`] contiguous index
//! blocks. Each block is reduced with a binary-cascade pairwise sum in index
//! order and the block sums are merged with a fixed pairwise tree, so the
//! result does not depend on the number of workers. The blocks double as
//! jackknife groups for error bars on nonlinear functionals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{CosineDamping, DampingLaw};
use crate::error::SimError;
use crate::sde::{run_path, CoarsenedNoise, NoiseStream};
use crate::types::{EnsembleStats, GaussianState, GroupMeans, SimParams};

pub const MAX_GROUPS: usize = 20;

// Per-sample accumulators. `dg` is gamma minus the common initial rate,
// which makes memoryless ensembles reduce exactly.
const Q: usize = 0;
const PHI: usize = 1;
const DG: usize = 2;
const DG_Q: usize = 3;
const G_Q2: usize = 4;
const MU: usize = 5;
const MU_SQ: usize = 6;
const Q_SQ: usize = 7;
const DG_SQ: usize = 8;
const G_Q: usize = 9;
const G_Q_SQ: usize = 10;
const N_FIELDS: usize = 11;

type Row = [f64; N_FIELDS];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    /// Cap on concurrently running trajectory groups; `None` uses the global
    /// rayon pool.
    pub workers: Option<usize>,
}

fn add_rows(mut a: Vec<Row>, b: &[Row]) -> Vec<Row> {
    for (x, y) in a.iter_mut().zip(b) {
        for f in 0..N_FIELDS {
            x[f] += y[f];
        }
    }
    a
}

/// Binary-counter pairwise summation: level `k` holds the sum of `2^k`
/// consecutive trajectories.
#[derive(Default)]
struct Cascade {
    levels: Vec<Option<Vec<Row>>>,
}

impl Cascade {
    fn push(&mut self, mut carry: Vec<Row>) {
        for slot in self.levels.iter_mut() {
            match slot.take() {
                Some(prev) => carry = add_rows(prev, &carry),
                None => {
                    *slot = Some(carry);
                    return;
                }
            }
        }
        self.levels.push(Some(carry));
    }

    fn finish(self, n_samples: usize) -> Vec<Row> {
        let mut acc: Option<Vec<Row>> = None;
        for partial in self.levels.into_iter().flatten() {
            acc = Some(match acc {
                None => partial,
                Some(lower) => add_rows(partial, &lower),
            });
        }
        acc.unwrap_or_else(|| vec![[0.0; N_FIELDS]; n_samples])
    }
}

struct GroupSums {
    n: usize,
    rows: Vec<Row>,
    failures: Vec<(usize, SimError)>,
}

fn tree_sum(groups: &[GroupSums]) -> Vec<Row> {
    if groups.len() == 1 {
        return groups[0].rows.clone();
    }
    let mid = groups.len() / 2;
    add_rows(tree_sum(&groups[..mid]), &tree_sum(&groups[mid..]))
}

fn group_bounds(n_traj: usize) -> Vec<(usize, usize)> {
    let g = n_traj.min(MAX_GROUPS);
    (0..g).map(|k| (k * n_traj / g, (k + 1) * n_traj / g)).collect()
}

fn run_group<L: DampingLaw>(
    params: &SimParams,
    init: &GaussianState,
    law: &L,
    gamma_ref: f64,
    noise_factor: usize,
    (start, end): (usize, usize),
) -> GroupSums {
    let n_samples = params.n_samples();
    let mut cascade = Cascade::default();
    let mut failures = Vec::new();
    for index in start..end {
        let mut rows = vec![[0.0; N_FIELDS]; n_samples];
        let mut noise = CoarsenedNoise::new(NoiseStream::new(params.master_seed, index as u64), noise_factor);
        let result = run_path(params, init, law, &mut noise, |k, s, gamma, _| {
            let q = s.mean_q;
            let dg = gamma - gamma_ref;
            let gq = gamma * q;
            rows[k] = [
                q,
                s.mean_phi,
                dg,
                dg * q,
                gamma * (q * q + s.var_q),
                s.mu,
                s.mu * s.mu,
                q * q,
                dg * dg,
                gq,
                gq * gq,
            ];
        });
        match result {
            Ok(()) => cascade.push(rows),
            Err(e) => failures.push((index, e)),
        }
    }
    GroupSums {
        n: end - start - failures.len(),
        rows: cascade.finish(n_samples),
        failures,
    }
}

fn sample_variance(sum: f64, sum_sq: f64, n: f64) -> f64 {
    ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0)
}

/// Runs `n_traj` trajectories and reduces them to ensemble averages.
pub fn run_ensemble(params: &SimParams, init: &GaussianState) -> Result<EnsembleStats, SimError> {
    run_ensemble_with_options(params, init, &EnsembleOptions::default())
}

pub fn run_ensemble_with_options(
    params: &SimParams,
    init: &GaussianState,
    options: &EnsembleOptions,
) -> Result<EnsembleStats, SimError> {
    run_ensemble_coupled(params, init, options, 1)
}

/// Ensemble whose trajectories draw `noise_factor` fine variates per step and
/// merge them, so runs at `dt` and `dt / noise_factor` see the same Brownian
/// paths.
pub(crate) fn run_ensemble_coupled(
    params: &SimParams,
    init: &GaussianState,
    options: &EnsembleOptions,
    noise_factor: usize,
) -> Result<EnsembleStats, SimError> {
    let params = params.validate()?;
    if params.n_traj < 2 {
        return Err(SimError::EnsembleTooSmall);
    }
    if !init.has_positive_variances() {
        return Err(SimError::InvalidInitialState {
            var_phi: init.var_phi,
            var_q: init.var_q,
        });
    }
    let law = CosineDamping::from_params(&params);
    let gamma_ref = law.rate(init.mu);
    let bounds = group_bounds(params.n_traj);

    let work = || -> Vec<GroupSums> {
        bounds
            .par_iter()
            .map(|&b| run_group(&params, init, &law, gamma_ref, noise_factor, b))
            .collect()
    };
    let groups = match options.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| SimError::WorkerPool(e.to_string()))?
            .install(work),
        None => work(),
    };

    let failures: Vec<(usize, SimError)> = groups.iter().flat_map(|g| g.failures.iter().cloned()).collect();
    if !failures.is_empty() {
        return Err(SimError::TrajectoriesFailed {
            n_traj: params.n_traj,
            failures,
        });
    }

    let total = tree_sum(&groups);
    let n = params.n_traj as f64;
    let root_n = n.sqrt();
    let n_samples = params.n_samples();
    let mut stats = EnsembleStats {
        times: params.sample_times(),
        e_q: Vec::with_capacity(n_samples),
        e_phi: Vec::with_capacity(n_samples),
        e_gamma: Vec::with_capacity(n_samples),
        e_gamma_q: Vec::with_capacity(n_samples),
        e_gamma_q2: Vec::with_capacity(n_samples),
        var_mu: Vec::with_capacity(n_samples),
        se_q: Vec::with_capacity(n_samples),
        se_gamma: Vec::with_capacity(n_samples),
        se_gamma_q: Vec::with_capacity(n_samples),
        n_traj: params.n_traj,
        groups: Vec::with_capacity(groups.len()),
    };
    for row in &total {
        let e_q = row[Q] / n;
        stats.e_q.push(e_q);
        stats.e_phi.push(row[PHI] / n);
        stats.e_gamma.push(gamma_ref + row[DG] / n);
        stats.e_gamma_q.push(gamma_ref * e_q + row[DG_Q] / n);
        stats.e_gamma_q2.push(row[G_Q2] / n);
        stats.var_mu.push(sample_variance(row[MU], row[MU_SQ], n));
        stats.se_q.push(sample_variance(row[Q], row[Q_SQ], n).sqrt() / root_n);
        stats.se_gamma.push(sample_variance(row[DG], row[DG_SQ], n).sqrt() / root_n);
        stats.se_gamma_q.push(sample_variance(row[G_Q], row[G_Q_SQ], n).sqrt() / root_n);
    }
    for g in &groups {
        let m = g.n as f64;
        let mut means = GroupMeans {
            n_traj: g.n,
            e_q: Vec::with_capacity(n_samples),
            e_gamma: Vec::with_capacity(n_samples),
            e_gamma_q: Vec::with_capacity(n_samples),
        };
        for row in &g.rows {
            let e_q = row[Q] / m;
            means.e_q.push(e_q);
            means.e_gamma.push(gamma_ref + row[DG] / m);
            means.e_gamma_q.push(gamma_ref * e_q + row[DG_Q] / m);
        }
        stats.groups.push(means);
    }
    Ok(stats)
}

/// Ensemble means with one jackknife group removed, for every group.
pub fn leave_one_group_out(stats: &EnsembleStats) -> Vec<GroupMeans> {
    let n = stats.n_traj as f64;
    let complement = |full: &[f64], part: &[f64], m: f64| -> Vec<f64> {
        full.iter().zip(part).map(|(f, p)| (n * f - m * p) / (n - m)).collect()
    };
    stats
        .groups
        .iter()
        .map(|g| {
            let m = g.n_traj as f64;
            GroupMeans {
                n_traj: stats.n_traj - g.n_traj,
                e_q: complement(&stats.e_q, &g.e_q, m),
                e_gamma: complement(&stats.e_gamma, &g.e_gamma, m),
                e_gamma_q: complement(&stats.e_gamma_q, &g.e_gamma_q, m),
            }
        })
        .collect()
}

/// Delete-one-group jackknife standard error from the replicate values.
pub fn jackknife_error(replicates: &[f64]) -> f64 {
    let g = replicates.len();
    if g < 2 {
        return 0.0;
    }
    let mean = replicates.iter().sum::<f64>() / g as f64;
    let ss: f64 = replicates.iter().map(|r| (r - mean).powi(2)).sum();
    ((g - 1) as f64 / g as f64 * ss).sqrt()
}

/// Deviation from factorisation `delta_q = E[gamma q] - E[gamma] E[q]` with
/// jackknife errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSeries {
    pub times: Vec<f64>,
    pub delta: Vec<f64>,
    pub se: Vec<f64>,
}

fn deviation(e_q: &[f64], e_gamma: &[f64], e_gamma_q: &[f64]) -> Vec<f64> {
    e_gamma_q
        .iter()
        .zip(e_gamma.iter().zip(e_q))
        .map(|(gq, (g, q))| gq - g * q)
        .collect()
}

pub fn factorization_deviation(stats: &EnsembleStats) -> DeviationSeries {
    let delta = deviation(&stats.e_q, &stats.e_gamma, &stats.e_gamma_q);
    let replicates: Vec<Vec<f64>> = leave_one_group_out(stats)
        .iter()
        .map(|g| deviation(&g.e_q, &g.e_gamma, &g.e_gamma_q))
        .collect();
    let se = (0..delta.len())
        .map(|k| {
            let r: Vec<f64> = replicates.iter().map(|rep| rep[k]).collect();
            jackknife_error(&r)
        })
        .collect();
    DeviationSeries {
        times: stats.times.clone(),
        delta,
        se,
    }
}
