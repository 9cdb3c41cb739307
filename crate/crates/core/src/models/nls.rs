use super::{check_dims, Hamiltonian};
use crate::error::{Error, Result};

/// Finite mode truncation of the cubic nonlinear Schrödinger equation with
/// nearest-neighbour coupling:
///
/// `H = ¼ Σ (q_i² + p_i²)² − Σ_{i≥2} (p_{i−1}² p_i² + q_{i−1}² q_i²
///      − q_{i−1}² p_i² − p_{i−1}² q_i² + 4 p_{i−1} p_i q_{i−1} q_i)`
#[derive(Debug, Clone, Copy)]
pub struct NlsHamiltonian {
    modes: usize,
}

impl NlsHamiltonian {
    pub fn new(modes: usize) -> Result<Self> {
        if modes < 2 {
            return Err(Error::invalid(format!("NLS truncation needs N >= 2 modes, got {modes}")));
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Preset `[q_1, p_1] = [3, 1]`, `[q_i, p_i] = [0.01, 0]` for `i > 1`.
    pub fn cascade_initial_condition(&self) -> (Vec<f64>, Vec<f64>) {
        let mut q = vec![0.01; self.modes];
        let mut p = vec![0.0; self.modes];
        q[0] = 3.0;
        p[0] = 1.0;
        (q, p)
    }
}

impl Hamiltonian for NlsHamiltonian {
    fn name(&self) -> &str {
        "nls"
    }

    fn dim(&self) -> usize {
        self.modes
    }

    fn energy(&self, q: &[f64], p: &[f64]) -> Result<f64> {
        check_dims(self, q, p)?;
        let quartic: f64 = q
            .iter()
            .zip(p)
            .map(|(a, b)| {
                let m = a * a + b * b;
                m * m
            })
            .sum();
        let mut coupling = 0.0;
        for i in 1..self.modes {
            let (qj, pj, qi, pi) = (q[i - 1], p[i - 1], q[i], p[i]);
            let (qj2, pj2, qi2, pi2) = (qj * qj, pj * pj, qi * qi, pi * pi);
            coupling += pj2 * pi2 + qj2 * qi2 - qj2 * pi2 - pj2 * qi2 + 4.0 * pj * pi * qj * qi;
        }
        Ok(0.25 * quartic - coupling)
    }

    fn gradient(&self, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) -> Result<()> {
        check_dims(self, q, p)?;
        for k in 0..self.modes {
            let m = q[k] * q[k] + p[k] * p[k];
            dq[k] = m * q[k];
            dp[k] = m * p[k];
        }
        // pair (j, i) = (i-1, i) contributes to both ends of the bond
        for i in 1..self.modes {
            let j = i - 1;
            let (qj, pj, qi, pi) = (q[j], p[j], q[i], p[i]);
            let a = qi * qi - pi * pi;
            let b = qj * qj - pj * pj;
            dq[j] -= 2.0 * qj * a + 4.0 * pj * pi * qi;
            dp[j] -= -2.0 * pj * a + 4.0 * pi * qj * qi;
            dq[i] -= 2.0 * qi * b + 4.0 * pj * pi * qj;
            dp[i] -= -2.0 * pi * b + 4.0 * pj * qj * qi;
        }
        Ok(())
    }
}

/// Per-mode masses `I_i = q_i² + p_i²` and their total.
#[derive(Debug, Clone, PartialEq)]
pub struct NlsObservables {
    pub masses: Vec<f64>,
    pub total: f64,
}

impl NlsObservables {
    pub fn modes(&self) -> usize {
        self.masses.len()
    }
}

pub fn nls_masses(q: &[f64], p: &[f64]) -> Result<NlsObservables> {
    if q.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            got: p.len(),
        });
    }
    let masses: Vec<f64> = q.iter().zip(p).map(|(a, b)| a * a + b * b).collect();
    let total = masses.iter().sum();
    Ok(NlsObservables { masses, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testing::gradient_discrepancy;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Term-by-term summation of the printed Hamiltonian, kept separate from
    /// the factored evaluation in the model.
    fn naive_energy(q: &[f64], p: &[f64]) -> f64 {
        let n = q.len();
        let mut h = 0.0;
        for i in 0..n {
            h += 0.25 * (q[i].powi(2) + p[i].powi(2)).powi(2);
        }
        for i in 1..n {
            h -= p[i - 1].powi(2) * p[i].powi(2);
            h -= q[i - 1].powi(2) * q[i].powi(2);
            h += q[i - 1].powi(2) * p[i].powi(2);
            h += p[i - 1].powi(2) * q[i].powi(2);
            h -= 4.0 * p[i - 1] * p[i] * q[i - 1] * q[i];
        }
        h
    }

    #[test]
    fn zero_state() {
        let m = NlsHamiltonian::new(4).unwrap();
        let z = [0.0; 4];
        assert_eq!(m.energy(&z, &z).unwrap(), 0.0);
        assert!(m.grad_a(&z, &z).unwrap().iter().all(|g| *g == 0.0));
        assert!(m.grad_b(&z, &z).unwrap().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn single_mode_quartic() {
        let m = NlsHamiltonian::new(2).unwrap();
        assert_eq!(m.energy(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.25);
    }

    #[test]
    fn two_mode_initial_point_matches_naive_sum() {
        let m = NlsHamiltonian::new(2).unwrap();
        let (q, p) = ([3.0, 0.01], [1.0, 0.0]);
        let h = m.energy(&q, &p).unwrap();
        // ¼(10² + 1e-8) − (9e-4 − 1e-4)
        assert_relative_eq!(h, 24.9992000025, max_relative = 1e-14);
        assert_relative_eq!(h, naive_energy(&q, &p), max_relative = 1e-14);
    }

    #[test]
    fn energy_matches_naive_sum_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..7 {
            let m = NlsHamiltonian::new(n).unwrap();
            for _ in 0..50 {
                let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let h = m.energy(&q, &p).unwrap();
                assert_relative_eq!(h, naive_energy(&q, &p), epsilon = 1e-11, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 3, 5] {
            let m = NlsHamiltonian::new(n).unwrap();
            for _ in 0..100 {
                let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                assert!(gradient_discrepancy(&m, &q, &p) <= 1e-6);
            }
        }
    }

    #[test]
    fn too_few_modes() {
        assert!(NlsHamiltonian::new(1).is_err());
        assert!(NlsHamiltonian::new(0).is_err());
    }

    #[test]
    fn masses() {
        let obs = nls_masses(&[3.0, 0.01], &[1.0, 0.0]).unwrap();
        assert_eq!(obs.masses[0], 10.0);
        assert_relative_eq!(obs.masses[1], 1e-4, max_relative = 1e-15);
        assert_relative_eq!(obs.total, 10.0001, max_relative = 1e-15);
        let zero = nls_masses(&[0.0; 3], &[0.0; 3]).unwrap();
        assert!(zero.masses.iter().all(|m| *m == 0.0));
        assert_eq!(zero.total, 0.0);
    }

    #[test]
    fn total_mass_poisson_commutes_with_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 3;
        let m = NlsHamiltonian::new(n).unwrap();
        let h = 1e-5;
        let total = |q: &[f64], p: &[f64]| nls_masses(q, p).unwrap().total;
        for _ in 0..100 {
            let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            // {I, H} = Σ ∂I/∂q ∂H/∂p − ∂I/∂p ∂H/∂q, all by central differences
            let mut bracket = 0.0;
            for k in 0..n {
                let diff = |f: &dyn Fn(&[f64], &[f64]) -> f64, wrt_q: bool| {
                    let (mut qp, mut qm, mut pp, mut pm) = (q.clone(), q.clone(), p.clone(), p.clone());
                    if wrt_q {
                        qp[k] += h;
                        qm[k] -= h;
                    } else {
                        pp[k] += h;
                        pm[k] -= h;
                    }
                    (f(&qp, &pp) - f(&qm, &pm)) / (2.0 * h)
                };
                let hf = |a: &[f64], b: &[f64]| m.energy(a, b).unwrap();
                bracket += diff(&total, true) * diff(&hf, false) - diff(&total, false) * diff(&hf, true);
            }
            assert!(bracket.abs() <= 1e-8, "{{I, H}} = {bracket}");
        }
    }
}
