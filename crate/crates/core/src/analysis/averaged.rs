//! Rotation average of the linear part of the copy-difference dynamics.
//!
//! For symmetric `S = [[A, B], [Bᵀ, D]]` the average of `e^{−Jτ} J S e^{Jτ}`
//! over one turn is `½ (J S + S J) = ½ [[Bᵀ − B, A + D], [−(A + D), Bᵀ − B]]`.
//! It is skew, so its flow is orthogonal.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Canonical `J = [[0, I], [−I, 0]]` of size `2d`.
pub fn canonical_j(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
    }
    j
}

/// `e^{Jτ} = cos τ I + sin τ J`.
fn rotation(d: usize, tau: f64) -> DMatrix<f64> {
    DMatrix::identity(2 * d, 2 * d) * tau.cos() + canonical_j(d) * tau.sin()
}

fn check_symmetric(s: &DMatrix<f64>) -> Result<usize> {
    let n = s.nrows();
    if n != s.ncols() || n == 0 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "expected a square matrix of even size, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let scale = s.amax().max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (s[(i, j)] - s[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(n / 2)
}

/// Closed-form average.
pub fn averaged_matrix(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = check_symmetric(s)?;
    let a = s.view((0, 0), (d, d));
    let b = s.view((0, d), (d, d));
    let dd = s.view((d, d), (d, d));
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    let bt_minus_b = b.transpose() - b;
    let a_plus_d = a + dd;
    out.view_mut((0, 0), (d, d)).copy_from(&(&bt_minus_b * 0.5));
    out.view_mut((0, d), (d, d)).copy_from(&(&a_plus_d * 0.5));
    out.view_mut((d, 0), (d, d)).copy_from(&(&a_plus_d * -0.5));
    out.view_mut((d, d), (d, d)).copy_from(&(&bt_minus_b * 0.5));
    Ok(out)
}

/// Trapezoidal quadrature of `(1/2π) ∫₀^{2π} e^{−Jτ} J S e^{Jτ} dτ` on `nodes`
/// equally spaced points.
pub fn averaged_matrix_quadrature(s: &DMatrix<f64>, nodes: usize) -> Result<DMatrix<f64>> {
    let d = check_symmetric(s)?;
    if nodes == 0 {
        return Err(Error::invalid("quadrature needs at least one node"));
    }
    let js = canonical_j(d) * s;
    let mut acc = DMatrix::zeros(2 * d, 2 * d);
    for k in 0..nodes {
        let tau = 2.0 * PI * k as f64 / nodes as f64;
        acc += rotation(d, -tau) * &js * rotation(d, tau);
    }
    Ok(acc / nodes as f64)
}

/// Integrates `Φ' = Ω(s) Φ`, `Φ(0) = I`, with classical RK4 on `[0, s_end]`,
/// where `Ω(s)` is the average of `S(s)`. Returns the largest
/// `‖ΦᵀΦ − I‖_max` met along the way.
pub fn fundamental_orthogonality_defect<F>(s_of: F, dim2: usize, s_end: f64, steps: usize) -> Result<f64>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    if steps == 0 {
        return Err(Error::invalid("steps must be >= 1"));
    }
    let omega = |s: f64| averaged_matrix(&s_of(s));
    let h = s_end / steps as f64;
    let id = DMatrix::<f64>::identity(dim2, dim2);
    let mut phi = id.clone();
    let mut worst = 0.0_f64;
    for k in 0..steps {
        let s = k as f64 * h;
        let o1 = omega(s)?;
        let o2 = omega(s + 0.5 * h)?;
        let o4 = omega(s + h)?;
        let k1 = &o1 * &phi;
        let k2 = &o2 * (&phi + &k1 * (0.5 * h));
        let k3 = &o2 * (&phi + &k2 * (0.5 * h));
        let k4 = &o4 * (&phi + &k3 * h);
        phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        worst = worst.max((phi.transpose() * &phi - &id).amax());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&m + m.transpose()) * 0.5
    }

    #[test]
    fn identity_averages_to_j() {
        for d in 1..4 {
            let omega = averaged_matrix(&DMatrix::identity(2 * d, 2 * d)).unwrap();
            assert_eq!(omega, canonical_j(d));
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s = random_symmetric(&mut rng, 4);
            let a = averaged_matrix(&s).unwrap();
            let b = averaged_matrix_quadrature(&s, 2048).unwrap();
            assert!((a - b).amax() <= 1e-10);
        }
    }

    #[test]
    fn result_is_skew() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = random_symmetric(&mut rng, 6);
        let o = averaged_matrix(&s).unwrap();
        assert_eq!(&o + o.transpose(), DMatrix::zeros(6, 6));
    }

    #[test]
    fn non_symmetric_is_rejected() {
        let mut s = DMatrix::<f64>::identity(4, 4);
        s[(0, 1)] = 1.0;
        assert!(averaged_matrix(&s).is_err());
        assert!(averaged_matrix(&DMatrix::<f64>::identity(3, 3)).is_err());
    }

    #[test]
    fn fundamental_matrix_stays_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let s0 = random_symmetric(&mut rng, 4);
        let s1 = random_symmetric(&mut rng, 4);
        let defect = fundamental_orthogonality_defect(
            |s| &s0 * s.cos() + &s1 * (0.7 * s).sin(),
            4,
            10.0,
            10_000,
        )
        .unwrap();
        assert!(defect <= 1e-8, "{defect}");
    }
}
