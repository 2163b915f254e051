//! Stationary second moments at fixed damping, the noise sum `D(tau)` and its
//! minimisation over the projection frequency.

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryMoments {
    pub c_st: f64,
    pub vq_st: f64,
    pub vphi_st: f64,
}

/// Fixed point of the second-moment equations with `gamma` frozen at
/// `gamma0`.
///
/// `C` is the negative root of `2C + 2 tau (1 - 4 C^2) = 0`, `V_q` the
/// positive root of `dV_q/dt = 0` given that `C`, and `V_phi` follows from
/// `dC/dt = 0`.
pub fn stationary_moments(gamma0: f64, lambda: f64, tau: f64) -> StationaryMoments {
    let c_st = -((1.0 + 16.0 * tau * tau).sqrt() - 1.0) / (8.0 * tau);
    let vq_st = ((gamma0 * gamma0 + 4.0 * tau * (2.0 * gamma0 * lambda - c_st)).sqrt() - gamma0) / (4.0 * tau);
    let vphi_st = vq_st - c_st * (2.0 * gamma0 + 8.0 * tau * vq_st);
    StationaryMoments { c_st, vq_st, vphi_st }
}

/// Sum of the diffusion amplitudes of `<q>`, `<phi>` and `mu` at the
/// stationary moments: `sqrt(8 tau) (V_q + |C|) + 1 / sqrt(8 tau)`.
pub fn noise_sum(tau: f64, gamma0: f64, lambda: f64) -> f64 {
    let st = stationary_moments(gamma0, lambda, tau);
    let s = (8.0 * tau).sqrt();
    s * st.vq_st + s * st.c_st.abs() + 1.0 / s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauOptReport {
    pub tau_opt: f64,
    pub d_min: f64,
    pub bracket: (f64, f64),
    /// Log-spaced `(tau, D(tau))` scan over the bracket.
    pub samples: Vec<(f64, f64)>,
    /// Set when the scan was not unimodal with an interior minimum and the
    /// grid minimum was reported instead of the golden-section result.
    pub fallback: Option<String>,
    pub iterations: usize,
}

pub const DEFAULT_BRACKET: (f64, f64) = (1e-3, 10.0);
const SCAN_POINTS: usize = 200;
const REL_TOL: f64 = 1e-4;

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
/// Returns `(x_min, f_min, iterations)`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64, usize) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut iterations = 0;
    while (b - a) > tol && iterations < 500 {
        iterations += 1;
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1, iterations)
    } else {
        (x2, f2, iterations)
    }
}

/// Index of the scan minimum, and whether the scan decreases strictly to it
/// and increases strictly after it with the minimum in the interior.
fn unimodal_interior(values: &[f64]) -> (usize, bool) {
    let argmin = values
        .iter()
        .enumerate()
        .fold(0, |best, (k, &v)| if v < values[best] { k } else { best });
    let down = values[..=argmin].windows(2).all(|w| w[1] < w[0]);
    let up = values[argmin..].windows(2).all(|w| w[1] > w[0]);
    let interior = argmin > 0 && argmin + 1 < values.len();
    (argmin, down && up && interior)
}

/// Minimises `noise_sum(., gamma0, lambda)` over `bracket` (in log-tau,
/// where the function is better conditioned).
pub fn optimize_tau(gamma0: f64, lambda: f64, bracket: (f64, f64)) -> Result<TauOptReport, AnalysisError> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(AnalysisError::InvalidBracket { lo, hi });
    }
    let samples: Vec<(f64, f64)> = log_space(lo, hi, SCAN_POINTS)
        .into_iter()
        .map(|t| (t, noise_sum(t, gamma0, lambda)))
        .collect();
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (argmin, unimodal) = unimodal_interior(&values);

    if !unimodal {
        let reason = format!(
            "noise sum is not unimodal with an interior minimum on [{lo}, {hi}]; using the grid minimum"
        );
        log::warn!("{reason}");
        return Ok(TauOptReport {
            tau_opt: samples[argmin].0,
            d_min: samples[argmin].1,
            bracket,
            samples,
            fallback: Some(reason),
            iterations: 0,
        });
    }

    // In u = ln tau an absolute bracket width of ln(1 + REL_TOL) is a
    // relative tolerance on tau.
    let f = |u: f64| noise_sum(u.exp(), gamma0, lambda);
    let (u, d_min, iterations) = golden_section_min(f, lo.ln(), hi.ln(), REL_TOL.ln_1p());
    Ok(TauOptReport {
        tau_opt: u.exp(),
        d_min,
        bracket,
        samples,
        fallback: None,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values: closed forms evaluated in 30-digit arithmetic.
    #[test]
    fn fig3_stationary_values() {
        let st = stationary_moments(0.1, 10.0, 0.2);
        assert_relative_eq!(st.c_st, -0.175_390_529_679_106_1, epsilon = 1e-13);
        assert_relative_eq!(st.vq_st, 1.528_742_169_172_354, epsilon = 1e-13);
        assert_relative_eq!(st.vphi_st, 1.992_823_313_178_454_8, epsilon = 1e-13);
    }

    #[test]
    fn strong_measurement_squeezes_charge() {
        let st = stationary_moments(0.1, 10.0, 4.0);
        assert_relative_eq!(st.vq_st, 0.386_683_726_177_503_25, epsilon = 1e-13);
        assert!(st.vq_st < 0.5);
        assert!(st.c_st <= 0.0 && st.vphi_st > 0.0);
    }

    #[test]
    fn weak_measurement_limit_is_thermal() {
        let st = stationary_moments(0.1, 10.0, 1e-8);
        assert!(st.c_st.abs() < 1e-7);
        assert!((st.vq_st - 10.0).abs() < 1e-4);
    }

    /// Euler integration of the second-moment equations at frozen damping.
    #[test]
    fn closed_forms_match_long_time_integration() {
        let (g, lam, tau, dt) = (0.1f64, 10.0f64, 0.2f64, 1e-3f64);
        let (mut vp, mut vq, mut c) = (0.5f64, 0.5f64, 0.0f64);
        for _ in 0..200_000 {
            let dvp = 2.0 * c + 2.0 * tau * (1.0 - 4.0 * c * c);
            let dvq = -2.0 * c - 4.0 * g * (vq - lam) - 8.0 * tau * vq * vq;
            let dc = (vq - vp) - c * (2.0 * g + 8.0 * tau * vq);
            (vp, vq, c) = (vp + dvp * dt, vq + dvq * dt, c + dc * dt);
        }
        let st = stationary_moments(g, lam, tau);
        assert!((c - st.c_st).abs() < 1e-3);
        assert!((vq - st.vq_st).abs() < 1e-3);
        assert!((vp - st.vphi_st).abs() < 1e-3);
    }

    #[test]
    fn noise_sum_values_and_limits() {
        assert_relative_eq!(noise_sum(0.2, 0.1, 10.0), 2.946_145_720_458_263, epsilon = 1e-12);
        assert_relative_eq!(noise_sum(10.0, 0.1, 10.0), 6.681_825_519_789_873, epsilon = 1e-12);
        assert_relative_eq!(noise_sum(100.0, 0.1, 10.0), 16.370_629_522_684_025, epsilon = 1e-11);
        assert!(noise_sum(1e-6, 0.1, 10.0) > 300.0);
        assert!(noise_sum(1e4, 0.1, 10.0) > noise_sum(100.0, 0.1, 10.0));
    }

    #[test]
    fn optimal_tau_near_one_fifth() {
        let r = optimize_tau(0.1, 10.0, DEFAULT_BRACKET).unwrap();
        assert!(r.fallback.is_none());
        assert!((0.15..=0.25).contains(&r.tau_opt));
        // Dense-grid refinement of dD/dtau = 0 gives 0.1889697566.
        assert!((r.tau_opt - 0.188_969_756_6).abs() / 0.189 < 2e-4, "{}", r.tau_opt);
        for &(_, d) in &r.samples {
            assert!(r.d_min <= d + 1e-12);
        }
    }

    #[test]
    fn optimal_tau_shifts_with_temperature() {
        let r = optimize_tau(0.1, 1.0, DEFAULT_BRACKET).unwrap();
        assert!((r.tau_opt - 0.161_535_489_1).abs() / 0.1615 < 2e-4, "{}", r.tau_opt);
    }

    #[test]
    fn halving_the_bracket_keeps_the_minimizer() {
        let r = optimize_tau(0.1, 10.0, DEFAULT_BRACKET).unwrap();
        let t = r.tau_opt;
        let r2 = optimize_tau(0.1, 10.0, (t / 2.0, t * 2.0)).unwrap();
        assert!((r2.tau_opt - t).abs() / t < 2e-4);
    }

    #[test]
    fn boundary_minimum_falls_back_to_grid() {
        let r = optimize_tau(0.1, 10.0, (1.0, 10.0)).unwrap();
        assert!(r.fallback.is_some());
        assert_eq!(r.tau_opt, 1.0);
        assert_eq!(r.samples.len(), 200);
    }

    #[test]
    fn invalid_brackets() {
        assert!(optimize_tau(0.1, 10.0, (0.0, 1.0)).is_err());
        assert!(optimize_tau(0.1, 10.0, (2.0, 1.0)).is_err());
    }

    #[test]
    fn golden_section_on_a_parabola() {
        let (x, fx, _) = golden_section_min(|x| (x - 3.0).powi(2) + 1.0, 0.0, 10.0, 1e-8);
        assert!((x - 3.0).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }
}
