use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use qmemristor::analysis::{
    classical_curve, collapse_time, convergence_study, deviation_at_crossings, ensemble_loop_area,
    loop_area_first_period, optimize_tau, AreaEstimate, CrossingDeviation,
};
use qmemristor::presets::PERIOD;
use qmemristor::sde::{integrate_classical, integrate_trajectory, NoiseStream};
use qmemristor::{run_ensemble_with_options, ClassicalState, EnsembleOptions};

use crate::config::RunConfig;
use crate::{output, CliError};

fn prepare(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("creating {}: {e}", out.display())))
}

#[derive(Serialize)]
struct SimulateSummary {
    command: &'static str,
    config: RunConfig,
    seed: u64,
    n_steps: usize,
    n_samples: usize,
    /// Euler steps over the whole ensemble.
    total_steps: u64,
    collapse_time: Option<f64>,
    first_period_area: Option<AreaEstimate>,
    delta_q_at_crossings: Vec<CrossingDeviation>,
    min_e_gamma_q2: f64,
    trajectories: Vec<usize>,
}

pub fn simulate(cfg: RunConfig, out: &Path, workers: Option<usize>, trajectories: &[usize]) -> Result<(), CliError> {
    let p = cfg.params;
    if let Some(&k) = trajectories.iter().find(|&&k| k >= p.n_traj) {
        return Err(CliError::Config(format!("trajectory {k} out of range (n_traj = {})", p.n_traj)));
    }
    prepare(out)?;
    let start = Instant::now();
    let stats = run_ensemble_with_options(&p, &cfg.initial, &EnsembleOptions { workers })?;
    output::ensemble_csv(&out.join("ensemble.csv"), &stats)?;

    let mut written = trajectories.to_vec();
    written.sort_unstable();
    written.dedup();
    for &k in &written {
        let rec = integrate_trajectory(&p, &cfg.initial, &mut NoiseStream::new(p.master_seed, k as u64))?;
        output::trajectory_csv(&out.join(format!("trajectory_{k}.csv")), &rec)?;
    }

    let first_period_area = if p.t_final >= PERIOD {
        Some(ensemble_loop_area(&stats, PERIOD)?)
    } else {
        log::warn!("t_final = {} is shorter than one period; no loop area", p.t_final);
        None
    };
    let summary = SimulateSummary {
        command: "simulate",
        config: cfg,
        seed: p.master_seed,
        n_steps: p.n_steps(),
        n_samples: p.n_samples(),
        total_steps: (p.n_steps() as u64) * (p.n_traj as u64),
        collapse_time: collapse_time(&stats),
        first_period_area,
        delta_q_at_crossings: deviation_at_crossings(&stats),
        min_e_gamma_q2: stats.e_gamma_q2.iter().copied().fold(f64::INFINITY, f64::min),
        trajectories: written,
    };
    output::summary_json(&out.join("summary.json"), &summary)?;
    eprintln!("simulate: {} trajectories in {:.2?}", p.n_traj, start.elapsed());
    Ok(())
}

#[derive(Serialize)]
struct ClassicalSummary {
    command: &'static str,
    config: RunConfig,
    first_period_area: Option<f64>,
    total_area: f64,
}

pub fn classical(cfg: RunConfig, out: &Path) -> Result<(), CliError> {
    prepare(out)?;
    let run = integrate_classical(&cfg.params, &ClassicalState::from_means(&cfg.initial));
    output::classical_csv(&out.join("classical.csv"), &run)?;
    let curve = classical_curve(&run)?;
    let first_period_area = if cfg.params.t_final >= PERIOD {
        Some(loop_area_first_period(&curve, PERIOD)?)
    } else {
        None
    };
    let summary = ClassicalSummary {
        command: "classical",
        config: cfg,
        first_period_area,
        total_area: curve.total_area,
    };
    output::summary_json(&out.join("summary.json"), &summary)
}

#[derive(Serialize)]
struct TauOptSummary {
    command: &'static str,
    gamma0: f64,
    lambda: f64,
    bracket: (f64, f64),
    tau_opt: f64,
    d_min: f64,
    iterations: usize,
    fallback: Option<String>,
}

pub fn tau_opt(gamma0: f64, lambda: f64, bracket: (f64, f64), out: &Path) -> Result<(), CliError> {
    if !(gamma0 >= 0.0 && lambda > 0.0) {
        return Err(CliError::Config(format!("need gamma0 ≥ 0 and lambda > 0, got {gamma0} and {lambda}")));
    }
    let report = optimize_tau(gamma0, lambda, bracket)?;
    prepare(out)?;
    output::tau_scan_csv(&out.join("tau_scan.csv"), &report)?;
    println!("tau_opt = {}", report.tau_opt);
    let summary = TauOptSummary {
        command: "tau-opt",
        gamma0,
        lambda,
        bracket: report.bracket,
        tau_opt: report.tau_opt,
        d_min: report.d_min,
        iterations: report.iterations,
        fallback: report.fallback,
    };
    output::summary_json(&out.join("summary.json"), &summary)
}

#[derive(Serialize)]
struct ConvergenceSummary {
    command: &'static str,
    config: RunConfig,
    dts: Vec<f64>,
    max_gamma_gaps: Vec<f64>,
    sample_interval: f64,
    monotone: bool,
}

pub fn convergence(cfg: RunConfig, dts: &[f64], out: &Path, workers: Option<usize>) -> Result<(), CliError> {
    prepare(out)?;
    let report = convergence_study(&cfg.params, &cfg.initial, dts, &EnsembleOptions { workers })?;
    output::convergence_csv(&out.join("convergence.csv"), &report.dts, &report.max_gamma_gaps)?;
    println!("monotone: {}", if report.monotone { "pass" } else { "fail" });
    let summary = ConvergenceSummary {
        command: "convergence",
        config: cfg,
        dts: report.dts,
        max_gamma_gaps: report.max_gamma_gaps,
        sample_interval: report.sample_interval,
        monotone: report.monotone,
    };
    output::summary_json(&out.join("summary.json"), &summary)
}
