//! Closed-form solution of `H = (Q² + 1)(P² + 1)/2` started on `P = 0`.

use std::f64::consts::FRAC_PI_2;

use super::elliptic::{elliptic_k, jacobi};
use crate::error::{Error, Result};

/// Parameters of the elliptic solution `Q(t) = Q0 cn(t √(1 + Q0²) | m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticParams {
    pub q0: f64,
    /// `Q0² / (1 + Q0²)`
    pub m: f64,
    /// Time to travel from `Q0` to `−Q0`; the motion is `2 half_period`-periodic.
    pub half_period: f64,
}

impl EllipticParams {
    pub fn new(q0: f64) -> Result<Self> {
        if !q0.is_finite() || q0 == 0.0 {
            return Err(Error::invalid(format!(
                "initial position must be finite and nonzero, got {q0}"
            )));
        }
        Ok(Self {
            q0,
            m: q0 * q0 / (1.0 + q0 * q0),
            half_period: half_period(q0)?,
        })
    }

    /// Rate of the elliptic argument, `√(1 + Q0²)`.
    pub fn rate(&self) -> f64 {
        (1.0 + self.q0 * self.q0).sqrt()
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_period
    }

    /// `(Q(t), P(t))`.
    pub fn solution(&self, t: f64) -> Result<(f64, f64)> {
        if !t.is_finite() {
            return Err(Error::invalid("time must be finite"));
        }
        let period = self.period();
        let mut tau = t - period * (t / period).floor();
        // second half-period is the first one reflected through the origin
        let sign = if tau >= self.half_period {
            tau -= self.half_period;
            -1.0
        } else {
            1.0
        };
        let k = self.rate();
        let j = jacobi(tau * k, self.m)?;
        let q = self.q0 * j.cn;
        let qdot = -self.q0 * k * j.sn * j.dn;
        let p = qdot / (1.0 + q * q);
        Ok((sign * q, sign * p))
    }
}

/// Half period `π ₂F₁(½, ½; 1; −Q0²)`.
///
/// The negative hypergeometric argument is mapped by the imaginary-modulus
/// transformation `K(−k²) = K(k²/(1 + k²)) / √(1 + k²)`.
pub fn half_period(q0: f64) -> Result<f64> {
    if !q0.is_finite() || q0 == 0.0 {
        return Err(Error::invalid(format!("half period undefined for Q0 = {q0}")));
    }
    let s = 1.0 + q0 * q0;
    Ok(2.0 * elliptic_k(q0 * q0 / s)? / s.sqrt())
}

/// Same quantity by quadrature of `2 ∫₀^{π/2} (1 + Q0² sin²θ)^{−1/2} dθ`.
///
/// The integrand is smooth and even-periodic, so the trapezoidal rule
/// converges geometrically; the node count is doubled until two estimates
/// agree to `1e-15` relative.
pub fn half_period_quadrature(q0: f64) -> Result<f64> {
    if !q0.is_finite() || q0 == 0.0 {
        return Err(Error::invalid(format!("half period undefined for Q0 = {q0}")));
    }
    let f = |theta: f64| 1.0 / (1.0 + q0 * q0 * theta.sin().powi(2)).sqrt();
    let trapezoid = |n: usize| {
        let h = FRAC_PI_2 / n as f64;
        let inner: f64 = (1..n).map(|k| f(k as f64 * h)).sum();
        h * (0.5 * (f(0.0) + f(FRAC_PI_2)) + inner)
    };
    let mut n = 8;
    let mut prev = trapezoid(n);
    while n < 1 << 20 {
        n *= 2;
        let next = trapezoid(n);
        if (next - prev).abs() <= 1e-15 * next {
            return Ok(2.0 * next);
        }
        prev = next;
    }
    Ok(2.0 * prev)
}

/// Exact `(Q(t), P(t))` from `(Q0, 0)`.
pub fn exact_solution(q0: f64, t: f64) -> Result<(f64, f64)> {
    EllipticParams::new(q0)?.solution(t)
}
