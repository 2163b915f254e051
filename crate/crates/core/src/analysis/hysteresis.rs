//! Voltage/current loops and their areas.
//!
//! A curve is cut into lobes at the zero crossings of the voltage proxy. Each
//! lobe is closed through its (interpolated) crossing points and measured
//! with the shoelace rule; the loop area is the sum of absolute lobe areas.

use crate::ensemble::{jackknife_error, leave_one_group_out};
use crate::error::AnalysisError;
use crate::sde::ClassicalSample;
use crate::types::{CurveSample, EnsembleStats, HysteresisCurve, Lobe};

/// A sign change of `v` between two samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Last sample index owned by the lobe that ends here.
    pub last_before: usize,
    /// First sample index owned by the lobe that starts here.
    pub first_after: usize,
    pub point: CurveSample,
}

/// Sign changes of `v`, located by linear interpolation.
///
/// A run of exact zeros between values of opposite sign yields one crossing
/// at the first zero, which is attached to the ending lobe. Zeros that merely
/// touch the axis are not crossings.
pub fn zero_crossings(samples: &[CurveSample]) -> Vec<Crossing> {
    let mut out = Vec::new();
    let mut last_nonzero: Option<usize> = None;
    for (k, s) in samples.iter().enumerate() {
        if s.v == 0.0 {
            continue;
        }
        if let Some(j) = last_nonzero {
            let a = samples[j];
            if a.v.signum() != s.v.signum() {
                if j + 1 == k {
                    let f = a.v / (a.v - s.v);
                    out.push(Crossing {
                        last_before: j,
                        first_after: k,
                        point: CurveSample {
                            t: a.t + f * (s.t - a.t),
                            v: 0.0,
                            i: a.i + f * (s.i - a.i),
                        },
                    });
                } else {
                    out.push(Crossing {
                        last_before: j + 1,
                        first_after: j + 2,
                        point: samples[j + 1],
                    });
                }
            }
        }
        last_nonzero = Some(k);
    }
    out
}

/// Shoelace area of the closed polygon through `points` (positive when
/// counter-clockwise in the `(v, i)` plane).
pub fn shoelace_area(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in 0..n {
        let (x0, y0) = points[k];
        let (x1, y1) = points[(k + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    0.5 * acc
}

fn is_closed(samples: &[CurveSample]) -> bool {
    let (a, b) = (samples[0], samples[samples.len() - 1]);
    let scale = samples
        .iter()
        .fold(1.0f64, |m, s| m.max(s.v.abs()).max(s.i.abs()));
    (a.v - b.v).abs() <= 1e-9 * scale && (a.i - b.i).abs() <= 1e-9 * scale
}

/// Builds the lobe decomposition of an ordered sample sequence.
pub fn hysteresis_from_samples(samples: Vec<CurveSample>) -> Result<HysteresisCurve, AnalysisError> {
    if samples.len() < 4 {
        return Err(AnalysisError::DegenerateCurve(format!(
            "need at least 4 samples, got {}",
            samples.len()
        )));
    }
    let crossings = zero_crossings(&samples);
    if crossings.is_empty() {
        return Err(AnalysisError::DegenerateCurve("voltage never crosses zero".into()));
    }

    struct Piece {
        first: usize,
        last: usize,
        t_start: f64,
        t_end: f64,
        points: Vec<(f64, f64)>,
    }
    let vi = |s: &CurveSample| (s.v, s.i);
    let mut pieces: Vec<Piece> = Vec::with_capacity(crossings.len() + 1);
    let mut start: Option<CurveSample> = None;
    let mut first = 0usize;
    for c in crossings.iter().chain(std::iter::once(&Crossing {
        last_before: samples.len() - 1,
        first_after: samples.len(),
        point: samples[samples.len() - 1],
    })) {
        let mut points: Vec<(f64, f64)> = start.iter().map(vi).collect();
        points.extend(samples[first..=c.last_before].iter().map(vi));
        let closing = (c.point.v, c.point.i);
        if points.last() != Some(&closing) {
            points.push(closing);
        }
        pieces.push(Piece {
            first,
            last: c.last_before,
            t_start: start.map_or(samples[first].t, |s| s.t),
            t_end: c.point.t,
            points,
        });
        start = Some(c.point);
        first = c.first_after;
        if first >= samples.len() {
            break;
        }
    }

    // A closed curve that does not start on the axis: the trailing piece and
    // the leading piece form one lobe across the seam.
    if pieces.len() > 2 && samples[0].v != 0.0 && is_closed(&samples) {
        let lead = pieces.remove(0);
        let tail = pieces.last_mut().expect("at least two pieces remain");
        tail.points.extend(lead.points.into_iter().skip(1));
        tail.last = lead.last;
        tail.t_end = lead.t_end;
    }

    let lobes: Vec<Lobe> = pieces
        .into_iter()
        .map(|p| Lobe {
            t_start: p.t_start,
            t_end: p.t_end,
            first_index: p.first,
            last_index: p.last,
            signed_area: shoelace_area(&p.points),
        })
        .collect();
    let total_area = lobes.iter().map(|l| l.signed_area.abs()).sum();
    Ok(HysteresisCurve {
        samples,
        lobes,
        total_area,
    })
}

pub fn hysteresis_from_series(times: &[f64], v: &[f64], i: &[f64]) -> Result<HysteresisCurve, AnalysisError> {
    if times.len() != v.len() || v.len() != i.len() {
        return Err(AnalysisError::GridMismatch);
    }
    let samples = times
        .iter()
        .zip(v.iter().zip(i))
        .map(|(&t, (&v, &i))| CurveSample { t, v, i })
        .collect();
    hysteresis_from_samples(samples)
}

/// Unconditioned loop `(E[<q>], E[gamma(mu) <q>])`.
pub fn hysteresis_curve(stats: &EnsembleStats) -> Result<HysteresisCurve, AnalysisError> {
    hysteresis_from_series(&stats.times, &stats.e_q, &stats.e_gamma_q)
}

/// Classical loop `(q, gamma(mu) q)`.
pub fn classical_curve(run: &[ClassicalSample]) -> Result<HysteresisCurve, AnalysisError> {
    hysteresis_from_samples(
        run.iter()
            .map(|s| CurveSample {
                t: s.t,
                v: s.state.q,
                i: s.i_m,
            })
            .collect(),
    )
}

/// Samples with `t` in `[t0, t0 + period]`, the right end interpolated.
pub fn restrict_to_period(samples: &[CurveSample], period: f64) -> Result<Vec<CurveSample>, AnalysisError> {
    let t0 = samples.first().map(|s| s.t).unwrap_or(0.0);
    let t_end = t0 + period;
    let last = samples.last().map(|s| s.t).unwrap_or(t0);
    if period.is_nan() || period <= 0.0 || last < t_end * (1.0 - 1e-12) {
        return Err(AnalysisError::DegenerateCurve(format!(
            "curve spans {} but the period is {period}",
            last - t0
        )));
    }
    let mut out: Vec<CurveSample> = samples.iter().take_while(|s| s.t <= t_end).copied().collect();
    let k = out.len();
    if k < samples.len() && out[k - 1].t < t_end {
        let (a, b) = (samples[k - 1], samples[k]);
        let f = (t_end - a.t) / (b.t - a.t);
        out.push(CurveSample {
            t: t_end,
            v: a.v + f * (b.v - a.v),
            i: a.i + f * (b.i - a.i),
        });
    }
    Ok(out)
}

/// Sum of absolute lobe areas of the curve restricted to its first `period`.
pub fn loop_area_first_period(curve: &HysteresisCurve, period: f64) -> Result<f64, AnalysisError> {
    let restricted = restrict_to_period(&curve.samples, period)?;
    Ok(hysteresis_from_samples(restricted)?.total_area)
}

/// First-period loop area of an ensemble with its jackknife error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AreaEstimate {
    pub area: f64,
    pub se: f64,
}

pub fn ensemble_loop_area(stats: &EnsembleStats, period: f64) -> Result<AreaEstimate, AnalysisError> {
    let area = loop_area_first_period(&hysteresis_curve(stats)?, period)?;
    let mut replicates = Vec::with_capacity(stats.groups.len());
    for g in leave_one_group_out(stats) {
        let curve = hysteresis_from_series(&stats.times, &g.e_q, &g.e_gamma_q)?;
        replicates.push(loop_area_first_period(&curve, period)?);
    }
    Ok(AreaEstimate {
        area,
        se: jackknife_error(&replicates),
    })
}

/// Relative L2 distance `||a - b|| / ||b||` between two curves sampled on the
/// same time grid, over `[t0, t0 + period]`.
pub fn relative_curve_distance(a: &HysteresisCurve, b: &HysteresisCurve, period: f64) -> Result<f64, AnalysisError> {
    let ra = restrict_to_period(&a.samples, period)?;
    let rb = restrict_to_period(&b.samples, period)?;
    if ra.len() != rb.len() || ra.iter().zip(&rb).any(|(x, y)| (x.t - y.t).abs() > 1e-9 * (1.0 + y.t.abs())) {
        return Err(AnalysisError::GridMismatch);
    }
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        diff += (x.v - y.v).powi(2) + (x.i - y.i).powi(2);
        norm += y.v * y.v + y.i * y.i;
    }
    Ok((diff / norm).sqrt())
}

/// Tolerances for "the classical loop almost coincides with the quantum one".
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AgreementTolerance {
    pub area_rel: f64,
    pub l2_rel: f64,
}

impl Default for AgreementTolerance {
    fn default() -> Self {
        AgreementTolerance {
            area_rel: 0.20,
            l2_rel: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AgreementReport {
    pub quantum_area: f64,
    pub classical_area: f64,
    pub area_rel_diff: f64,
    pub l2_rel: f64,
    pub agrees: bool,
}

pub fn classical_agreement(
    quantum: &HysteresisCurve,
    classical: &HysteresisCurve,
    period: f64,
    tol: AgreementTolerance,
) -> Result<AgreementReport, AnalysisError> {
    let quantum_area = loop_area_first_period(quantum, period)?;
    let classical_area = loop_area_first_period(classical, period)?;
    let area_rel_diff = (classical_area - quantum_area).abs() / quantum_area.abs();
    let l2_rel = relative_curve_distance(quantum, classical, period)?;
    Ok(AgreementReport {
        quantum_area,
        classical_area,
        area_rel_diff,
        l2_rel,
        agrees: area_rel_diff <= tol.area_rel && l2_rel <= tol.l2_rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn from_fn(n: usize, t_max: f64, f: impl Fn(f64) -> (f64, f64)) -> Vec<CurveSample> {
        (0..n)
            .map(|k| {
                let t = t_max * k as f64 / (n - 1) as f64;
                let (v, i) = f(t);
                CurveSample { t, v, i }
            })
            .collect()
    }

    #[test]
    fn circle_area() {
        let c = hysteresis_from_samples(from_fn(1000, 2.0 * PI, |t| (t.cos(), t.sin()))).unwrap();
        assert!((c.total_area - PI).abs() < 1e-4, "{}", c.total_area);
        assert_eq!(c.lobes.len(), 2);
    }

    #[test]
    fn segment_forth_and_back_has_no_area() {
        let c = hysteresis_from_samples(from_fn(501, 2.0, |t| {
            let v = 1.0 - (t - 1.0).abs() - 0.5;
            (v, 2.0 * v)
        }))
        .unwrap();
        assert!(c.total_area < 1e-12, "{}", c.total_area);
    }

    #[test]
    fn figure_eight() {
        // Two unit circles through the origin traversed in opposite senses.
        let mut s = from_fn(2001, 2.0 * PI, |t| (1.0 - t.cos(), t.sin()));
        let left = from_fn(2001, 2.0 * PI, |t| (t.cos() - 1.0, t.sin()));
        s.extend(left.into_iter().skip(1).map(|p| CurveSample { t: p.t + 2.0 * PI, ..p }));
        // Remove rounding residue so the junction is an exact zero.
        s[2000].v = 0.0;
        let c = hysteresis_from_samples(s).unwrap();
        assert_eq!(c.lobes.len(), 2);
        let (a, b) = (c.lobes[0].signed_area, c.lobes[1].signed_area);
        assert!(a * b < 0.0);
        assert!((a.abs() - b.abs()).abs() < 1e-9);
        assert!((c.total_area - 2.0 * a.abs()).abs() < 1e-12);
        assert!((a.abs() - PI).abs() < 1e-4);
        assert_eq!(c.lobes[0].last_index, 2000);
        assert_eq!(c.lobes[1].first_index, 2001);
    }

    #[test]
    fn degenerate_inputs() {
        let few = from_fn(3, 1.0, |t| (t - 0.5, t));
        assert!(matches!(hysteresis_from_samples(few), Err(AnalysisError::DegenerateCurve(_))));
        let positive = from_fn(10, 1.0, |t| (t + 1.0, t));
        assert!(matches!(hysteresis_from_samples(positive), Err(AnalysisError::DegenerateCurve(_))));
    }

    #[test]
    fn interpolated_crossing_location() {
        let s = vec![
            CurveSample { t: 0.0, v: 1.0, i: 0.0 },
            CurveSample { t: 1.0, v: -3.0, i: 4.0 },
        ];
        let c = zero_crossings(&s);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].point.t, 0.25);
        assert_eq!(c[0].point.i, 1.0);
    }

    #[test]
    fn lobes_partition_indices() {
        let c = hysteresis_from_samples(from_fn(777, 5.0 * PI, |t| (t.sin(), (2.0 * t).cos()))).unwrap();
        let mut next = 0;
        for l in &c.lobes {
            assert_eq!(l.first_index, next);
            next = l.last_index + 1;
        }
        assert_eq!(next, 777);
    }

    #[test]
    fn first_period_restriction() {
        // Three turns of a circle: restricting to one turn gives one circle.
        let c = hysteresis_from_samples(from_fn(3001, 6.0 * PI, |t| (t.sin(), t.cos()))).unwrap();
        assert!((c.total_area - 3.0 * PI).abs() < 1e-3);
        let a = loop_area_first_period(&c, 2.0 * PI).unwrap();
        assert!((a - PI).abs() < 1e-4, "{a}");
        assert!(loop_area_first_period(&c, 7.0 * PI).is_err());
    }

    proptest! {
        #[test]
        fn reversal_flips_signs(a in 0.1f64..3.0, w in 0.5f64..3.0, phase in 0.0f64..6.0, n in 50usize..400) {
            let fwd = from_fn(n, 4.0 * PI, |t| ((w * t).sin() * a, (w * t + phase).cos()));
            let mut rev = fwd.clone();
            rev.reverse();
            let (cf, cr) = match (hysteresis_from_samples(fwd), hysteresis_from_samples(rev)) {
                (Ok(x), Ok(y)) => (x, y),
                _ => return Ok(()),
            };
            prop_assert_eq!(cf.lobes.len(), cr.lobes.len());
            for (x, y) in cf.lobes.iter().zip(cr.lobes.iter().rev()) {
                prop_assert!((x.signed_area + y.signed_area).abs() <= 1e-9 * (1.0 + x.signed_area.abs()));
            }
            prop_assert!((cf.total_area - cr.total_area).abs() <= 1e-9 * (1.0 + cf.total_area));
            prop_assert!(cf.total_area >= 0.0);
        }
    }
}
