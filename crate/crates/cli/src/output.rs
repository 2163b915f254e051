//! CSV and JSON writers. Floats use the shortest decimal form that parses
//! back to the same value.

use std::fs;
use std::path::Path;

use serde::Serialize;

use qmemristor::analysis::TauOptReport;
use qmemristor::sde::ClassicalSample;
use qmemristor::{EnsembleStats, TrajectoryRecord};

use crate::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("writing {}: {e}", path.display()))
}

fn write_csv<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl Iterator<Item = [f64; N]>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string())).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn ensemble_csv(path: &Path, s: &EnsembleStats) -> Result<(), CliError> {
    write_csv(
        path,
        ["time", "e_q", "e_phi", "e_gamma", "e_gamma_q", "e_gamma_q2", "var_mu", "se_q", "se_gamma_q"],
        (0..s.times.len()).map(|k| {
            [
                s.times[k],
                s.e_q[k],
                s.e_phi[k],
                s.e_gamma[k],
                s.e_gamma_q[k],
                s.e_gamma_q2[k],
                s.var_mu[k],
                s.se_q[k],
                s.se_gamma_q[k],
            ]
        }),
    )
}

pub fn trajectory_csv(path: &Path, r: &TrajectoryRecord) -> Result<(), CliError> {
    write_csv(
        path,
        ["time", "mean_phi", "mean_q", "var_phi", "var_q", "cov", "mu", "gamma"],
        r.times.iter().zip(&r.states).zip(&r.gammas).map(|((&t, s), &g)| {
            [t, s.mean_phi, s.mean_q, s.var_phi, s.var_q, s.cov, s.mu, g]
        }),
    )
}

/// Classical run; `energy` is `(phi^2 + q^2) / 2`.
pub fn classical_csv(path: &Path, run: &[ClassicalSample]) -> Result<(), CliError> {
    write_csv(
        path,
        ["time", "phi", "q", "mu", "gamma", "i_m", "energy"],
        run.iter().map(|s| {
            let e = 0.5 * (s.state.phi * s.state.phi + s.state.q * s.state.q);
            [s.t, s.state.phi, s.state.q, s.state.mu, s.gamma, s.i_m, e]
        }),
    )
}

pub fn tau_scan_csv(path: &Path, r: &TauOptReport) -> Result<(), CliError> {
    write_csv(path, ["tau", "D"], r.samples.iter().map(|&(t, d)| [t, d]))
}

pub fn convergence_csv(path: &Path, dts: &[f64], gaps: &[f64]) -> Result<(), CliError> {
    write_csv(path, ["dt", "max_gamma_gap"], dts.iter().zip(gaps).map(|(&d, &g)| [d, g]))
}

pub fn summary_json(path: &Path, summary: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}
