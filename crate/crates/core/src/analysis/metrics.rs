//! Error series against a benchmark and conservation diagnostics.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::integrator::extended_energy;
use crate::models::Hamiltonian;
use crate::state::{PhaseTrajectory, Trajectory};

/// Per-sample errors of a one-degree-of-freedom trajectory in polar
/// coordinates of the `(Q, P)` plane.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolarErrorSeries {
    pub times: Vec<f64>,
    /// `|r_num − r_exact|`
    pub amplitude_error: Vec<f64>,
    /// `|θ_num − θ_exact|` of the unwrapped angles.
    pub phase_error: Vec<f64>,
}

impl PolarErrorSeries {
    pub fn max_amplitude_error(&self) -> f64 {
        self.amplitude_error.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_phase_error(&self) -> f64 {
        self.phase_error.iter().copied().fold(0.0, f64::max)
    }
}

/// Largest per-sample angle increment accepted by the unwrapper.
pub const MAX_UNWRAP_INCREMENT: f64 = PI / 2.0;

/// Continuous polar angle along a sampled curve. Fails when the curve passes
/// within `1e-12` of the origin or when consecutive samples are too far apart
/// in angle to unwrap unambiguously.
pub fn unwrapped_angles(q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(q.len());
    let mut prev_raw = 0.0;
    let mut offset = 0.0;
    for (i, (&a, &b)) in q.iter().zip(p).enumerate() {
        if a.hypot(b) < 1e-12 {
            return Err(Error::PhaseUndefined { index: i });
        }
        let raw = b.atan2(a);
        if i > 0 {
            let mut jump = raw - prev_raw;
            if jump > PI {
                offset -= 2.0 * PI;
                jump -= 2.0 * PI;
            } else if jump < -PI {
                offset += 2.0 * PI;
                jump += 2.0 * PI;
            }
            if jump.abs() >= MAX_UNWRAP_INCREMENT {
                return Err(Error::invalid(format!(
                    "angle changes by {jump:.3} rad between samples {} and {i}; sample more finely",
                    i - 1
                )));
            }
        }
        out.push(raw + offset);
        prev_raw = raw;
    }
    Ok(out)
}

fn first_coordinate(series: &PhaseTrajectory) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut q = Vec::with_capacity(series.len());
    let mut p = Vec::with_capacity(series.len());
    for (a, b) in series.q.iter().zip(&series.p) {
        if a.len() != 1 || b.len() != 1 {
            return Err(Error::invalid("polar errors need a one-degree-of-freedom series"));
        }
        q.push(a[0]);
        p.push(b[0]);
    }
    Ok((q, p))
}

/// Amplitude and unwrapped phase errors of `numeric` against `exact` on a
/// common time grid.
pub fn polar_errors(numeric: &PhaseTrajectory, exact: &PhaseTrajectory) -> Result<PolarErrorSeries> {
    if numeric.len() != exact.len() {
        return Err(Error::DimensionMismatch {
            expected: exact.len(),
            got: numeric.len(),
        });
    }
    for (a, b) in numeric.times.iter().zip(&exact.times) {
        if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
            return Err(Error::invalid(format!("time grids differ: {a} vs {b}")));
        }
    }
    let (nq, np) = first_coordinate(numeric)?;
    let (eq, ep) = first_coordinate(exact)?;
    let tn = unwrapped_angles(&nq, &np)?;
    let te = unwrapped_angles(&eq, &ep)?;
    let amplitude_error = nq
        .iter()
        .zip(&np)
        .zip(eq.iter().zip(&ep))
        .map(|((a, b), (c, d))| (a.hypot(*b) - c.hypot(*d)).abs())
        .collect();
    let phase_error = tn.iter().zip(&te).map(|(a, b)| (a - b).abs()).collect();
    Ok(PolarErrorSeries {
        times: numeric.times.clone(),
        amplitude_error,
        phase_error,
    })
}

/// Cumulative maximum of `|numeric − benchmark| / scaling`, per column.
///
/// Rows are samples; each row holds one value per observed coordinate.
pub fn scaled_running_max_errors(
    numeric: &[Vec<f64>],
    benchmark: &[Vec<f64>],
    scalings: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if numeric.len() != benchmark.len() {
        return Err(Error::DimensionMismatch {
            expected: benchmark.len(),
            got: numeric.len(),
        });
    }
    if let Some(s) = scalings.iter().find(|s| !(s.abs() > 0.0) || !s.is_finite()) {
        return Err(Error::invalid(format!("error scaling must be finite and nonzero, got {s}")));
    }
    let cols = scalings.len();
    let mut out = vec![Vec::with_capacity(numeric.len()); cols];
    let mut running = vec![0.0_f64; cols];
    for (a, b) in numeric.iter().zip(benchmark) {
        if a.len() != cols || b.len() != cols {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: a.len().min(b.len()),
            });
        }
        for c in 0..cols {
            let e = (a[c] - b[c]).abs() / scalings[c].abs();
            running[c] = running[c].max(e);
            out[c].push(running[c]);
        }
    }
    Ok(out)
}

/// Scalings for `(t, r, φ, H)` errors of an orbit with initial semi-major
/// axis `a0`, eccentricity `e0` and central mass `mass`: the Keplerian period,
/// the apocentre distance, a full turn, and one.
pub fn orbit_error_scalings(a0: f64, e0: f64, mass: f64) -> [f64; 4] {
    [2.0 * PI * (a0.powi(3) / mass).sqrt(), a0 * (1.0 + e0), 2.0 * PI, 1.0]
}

/// `v(t) − v(0)`
pub fn drift(values: &[f64]) -> Vec<f64> {
    match values.first() {
        Some(&v0) => values.iter().map(|v| v - v0).collect(),
        None => Vec::new(),
    }
}

/// `H` along a series in the original phase space.
pub fn energy_series(model: &dyn Hamiltonian, traj: &PhaseTrajectory) -> Result<Vec<f64>> {
    traj.q
        .iter()
        .zip(&traj.p)
        .map(|(q, p)| model.energy(q, p))
        .collect()
}

/// Original and extended energy drifts along an extended trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDrift {
    pub times: Vec<f64>,
    /// `H(q, p) − H(q0, p0)`
    pub original: Vec<f64>,
    /// `H̄(t) − H̄(0)`
    pub extended: Vec<f64>,
}

impl EnergyDrift {
    pub fn max_abs_extended(&self) -> f64 {
        self.extended.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_original(&self) -> f64 {
        self.original.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn energy_drift(model: &dyn Hamiltonian, omega: f64, traj: &Trajectory) -> Result<EnergyDrift> {
    let mut original = Vec::with_capacity(traj.len());
    let mut extended = Vec::with_capacity(traj.len());
    for s in &traj.states {
        original.push(model.energy(&s.q, &s.p)?);
        extended.push(extended_energy(model, omega, s)?);
    }
    Ok(EnergyDrift {
        times: traj.times.clone(),
        original: drift(&original),
        extended: drift(&extended),
    })
}

/// Ordinary least squares `y ≈ intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope under i.i.d. residuals.
    pub slope_stderr: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("linear fit needs at least two points"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("linear fit needs distinct abscissae"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("log-log fit needs strictly positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::EllipticParams;
    use approx::assert_relative_eq;

    fn exact_series(q0: f64, times: &[f64]) -> PhaseTrajectory {
        let params = EllipticParams::new(q0).unwrap();
        let mut out = PhaseTrajectory::default();
        for &t in times {
            let (q, p) = params.solution(t).unwrap();
            out.push(t, vec![q], vec![p]);
        }
        out
    }

    #[test]
    fn identical_series_have_zero_error() {
        let times: Vec<f64> = (0..400).map(|k| k as f64 * 0.05).collect();
        let ex = exact_series(-3.0, &times);
        let e = polar_errors(&ex, &ex).unwrap();
        assert_eq!(e.max_amplitude_error(), 0.0);
        assert_eq!(e.max_phase_error(), 0.0);
    }

    #[test]
    fn shift_by_one_period_is_invisible() {
        let params = EllipticParams::new(-3.0).unwrap();
        let times: Vec<f64> = (0..400).map(|k| k as f64 * 0.05).collect();
        let a = exact_series(-3.0, &times);
        let mut b = PhaseTrajectory::default();
        for &t in &times {
            let (q, p) = params.solution(t + params.period()).unwrap();
            b.push(t, vec![q], vec![p]);
        }
        let e = polar_errors(&a, &b).unwrap();
        assert!(e.max_amplitude_error() < 1e-10);
        assert!(e.max_phase_error() < 1e-10);
    }

    #[test]
    fn unwrapping_accumulates_turns() {
        let n = 1000;
        let q: Vec<f64> = (0..n).map(|k| (k as f64 * 0.1).cos()).collect();
        let p: Vec<f64> = (0..n).map(|k| (k as f64 * 0.1).sin()).collect();
        let th = unwrapped_angles(&q, &p).unwrap();
        assert_relative_eq!(*th.last().unwrap(), (n - 1) as f64 * 0.1, max_relative = 1e-12);
    }

    #[test]
    fn phase_undefined_at_origin() {
        let err = unwrapped_angles(&[1.0, 0.0], &[0.0, 0.0]).unwrap_err();
        assert_eq!(err, Error::PhaseUndefined { index: 1 });
    }

    #[test]
    fn coarse_sampling_is_rejected() {
        assert!(unwrapped_angles(&[1.0, -1.0], &[0.0, 0.1]).is_err());
    }

    #[test]
    fn running_max_is_monotone_and_zero_on_self() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|k| vec![k as f64, (k as f64).sin(), 0.1 * k as f64, 0.5])
            .collect();
        let zero = scaled_running_max_errors(&rows, &rows, &[1.0, 2.0, 3.0, 1.0]).unwrap();
        assert!(zero.iter().flatten().all(|v| *v == 0.0));
        let noisy: Vec<Vec<f64>> = rows
            .iter()
            .enumerate()
            .map(|(k, r)| r.iter().map(|v| v + 1e-3 * (k as f64 * 1.7).sin()).collect())
            .collect();
        let e = scaled_running_max_errors(&noisy, &rows, &orbit_error_scalings(20.0, 0.0, 10.0)).unwrap();
        for col in &e {
            assert!(col.windows(2).all(|w| w[1] >= w[0]));
        }
        assert!(scaled_running_max_errors(&rows, &rows, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn fits() {
        let x: Vec<f64> = (1..10).map(|v| v as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(f.slope, 3.0, max_relative = 1e-14);
        assert_relative_eq!(f.intercept, -2.0, max_relative = 1e-13);
        let y2: Vec<f64> = x.iter().map(|v| 5.0 * v.powi(4)).collect();
        assert_relative_eq!(loglog_slope(&x, &y2).unwrap(), 4.0, max_relative = 1e-12);
        assert!(loglog_slope(&[1.0, 2.0], &[0.0, 1.0]).is_err());
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn drift_of_constant_series() {
        assert_eq!(drift(&[2.0, 2.0, 2.0]), vec![0.0, 0.0, 0.0]);
        assert!(drift(&[]).is_empty());
    }
}
