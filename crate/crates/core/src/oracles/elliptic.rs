//! Jacobi elliptic functions and the complete elliptic integral of the first
//! kind, both by the arithmetic–geometric mean.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

const MAX_AGM_ITERATIONS: usize = 64;

/// `(sn, cn, dn)` at `(u | m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiTriple {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

fn check_parameter(m: f64) -> Result<()> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::invalid(format!("elliptic parameter must lie in [0, 1), got {m}")));
    }
    Ok(())
}

/// Complete elliptic integral `K(m) = π / (2 AGM(1, √(1 − m)))` for `m < 1`.
///
/// Negative parameters are accepted; the AGM form holds for all `m < 1`.
pub fn elliptic_k(m: f64) -> Result<f64> {
    if !(m < 1.0) || !m.is_finite() {
        return Err(Error::invalid(format!("K(m) needs finite m < 1, got {m}")));
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    for _ in 0..MAX_AGM_ITERATIONS {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    Ok(PI / (a + b))
}

/// Jacobi `sn`, `cn`, `dn` by descending Landen transformation.
///
/// The argument is first reduced modulo the real period `4K(m)`.
pub fn jacobi(u: f64, m: f64) -> Result<JacobiTriple> {
    check_parameter(m)?;
    if !u.is_finite() {
        return Err(Error::invalid("jacobi: argument must be finite"));
    }
    if m == 0.0 {
        let (sn, cn) = u.sin_cos();
        return Ok(JacobiTriple { sn, cn, dn: 1.0 });
    }
    let period = 4.0 * elliptic_k(m)?;
    let u = u - period * (u / period).round();

    let mut a = [0.0_f64; MAX_AGM_ITERATIONS + 1];
    let mut c = [0.0_f64; MAX_AGM_ITERATIONS + 1];
    a[0] = 1.0;
    let mut b = (1.0 - m).sqrt();
    c[0] = m.sqrt();
    let mut n = 0;
    while c[n].abs() > f64::EPSILON * a[n] && n < MAX_AGM_ITERATIONS {
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        n += 1;
    }
    let mut phi = 2f64.powi(n as i32) * a[n] * u;
    let mut prev = phi;
    for k in (1..=n).rev() {
        prev = phi;
        phi = 0.5 * (phi + (c[k] / a[k] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    // the ratio form loses accuracy as cn → 0
    let dn = if n == 0 {
        1.0
    } else if cn.abs() >= 0.5 {
        cn / (prev - phi).cos()
    } else {
        (1.0 - m * sn * sn).sqrt()
    };
    Ok(JacobiTriple { sn, cn, dn })
}

pub fn jacobi_cn(u: f64, m: f64) -> Result<f64> {
    Ok(jacobi(u, m)?.cn)
}

/// `₂F₁(½, ½; 1; z)` for `z < 1`, via `(2/π) K(z)`.
pub fn hypergeometric_half_half_one(z: f64) -> Result<f64> {
    Ok(elliptic_k(z)? / FRAC_PI_2)
}
