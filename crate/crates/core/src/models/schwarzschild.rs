use super::{check_dims, Hamiltonian};
use crate::error::{Error, Result};

/// Evaluation is refused for `r <= 2 + HORIZON_MARGIN`.
pub const HORIZON_MARGIN: f64 = 1e-9;

/// Schwarzschild geodesics in the equatorial plane, `Q = [t, r, φ]`,
/// `P = [p_t, p_r, p_φ]`:
///
/// `H = ½ [ (1 − 2/r)⁻¹ p_t² − (1 − 2/r) p_r² − p_φ² / r² ]`
///
/// `t` and `φ` are cyclic, so `p_t` and `p_φ` are first integrals.
#[derive(Debug, Clone, Copy, Default)]
pub struct Schwarzschild;

impl Schwarzschild {
    fn radius(a: &[f64]) -> Result<f64> {
        let r = a[1];
        if !(r > 2.0 + HORIZON_MARGIN) {
            return Err(Error::Domain {
                model: "schwarzschild",
                reason: format!("inside horizon: r = {r}"),
            });
        }
        Ok(r)
    }
}

impl Hamiltonian for Schwarzschild {
    fn name(&self) -> &str {
        "schwarzschild"
    }

    fn dim(&self) -> usize {
        3
    }

    fn energy(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_dims(self, a, b)?;
        let r = Self::radius(a)?;
        let f = 1.0 - 2.0 / r;
        let (pt, pr, pphi) = (b[0], b[1], b[2]);
        Ok(0.5 * (pt * pt / f - f * pr * pr - pphi * pphi / (r * r)))
    }

    fn gradient(&self, a: &[f64], b: &[f64], da: &mut [f64], db: &mut [f64]) -> Result<()> {
        check_dims(self, a, b)?;
        let r = Self::radius(a)?;
        let f = 1.0 - 2.0 / r;
        let r2 = r * r;
        let (pt, pr, pphi) = (b[0], b[1], b[2]);
        da[0] = 0.0;
        da[1] = -pt * pt / (r2 * f * f) - pr * pr / r2 + pphi * pphi / (r2 * r);
        da[2] = 0.0;
        db[0] = pt / f;
        db[1] = -f * pr;
        db[2] = -pphi / r2;
        Ok(())
    }
}

/// Named initial conditions at `Q(0) = [0, 20, 0]`, `p_r(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchwarzschildPreset {
    /// `P(0) = [0.982, 0, −4.472]` as printed with the published orbit data.
    Printed,
    /// `p_φ = −√20` and `p_t` solving `H(0) = m²/2` with `m = 1`.
    #[default]
    Constraint,
}

impl SchwarzschildPreset {
    pub const R0: f64 = 20.0;

    pub fn initial_condition(self) -> (Vec<f64>, Vec<f64>) {
        let q0 = vec![0.0, Self::R0, 0.0];
        let p0 = match self {
            SchwarzschildPreset::Printed => vec![0.982, 0.0, -4.472],
            SchwarzschildPreset::Constraint => {
                let r = Self::R0;
                let f = 1.0 - 2.0 / r;
                let pphi2 = r;
                // ½ [p_t²/f − p_φ²/r²] = ½
                let pt = (f * (1.0 + pphi2 / (r * r))).sqrt();
                vec![pt, 0.0, -pphi2.sqrt()]
            }
        };
        (q0, p0)
    }

    pub fn name(self) -> &'static str {
        match self {
            SchwarzschildPreset::Printed => "printed",
            SchwarzschildPreset::Constraint => "constraint",
        }
    }
}

impl std::str::FromStr for SchwarzschildPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(SchwarzschildPreset::Printed),
            "constraint" => Ok(SchwarzschildPreset::Constraint),
            other => Err(Error::invalid(format!("unknown schwarzschild preset '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testing::gradient_discrepancy;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn energy_at_initial_point() {
        let pt = 0.9_f64;
        let h = Schwarzschild
            .energy(&[0.0, 20.0, 0.0], &[pt, 0.0, -4.472])
            .unwrap();
        let expected = 0.5 * (pt * pt / 0.9 - 4.472 * 4.472 / 400.0);
        assert_relative_eq!(h, expected, max_relative = 1e-15);
    }

    #[test]
    fn constraint_preset_solves_mass_shell() {
        let (q0, p0) = SchwarzschildPreset::Constraint.initial_condition();
        assert_relative_eq!(p0[0], (0.9_f64 * 1.05).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(p0[0], 0.97211, epsilon = 1e-5);
        let h = Schwarzschild.energy(&q0, &p0).unwrap();
        assert_relative_eq!(h, 0.5, max_relative = 1e-14);

        let (q0, p0) = SchwarzschildPreset::Printed.initial_condition();
        let h_printed = Schwarzschild.energy(&q0, &p0).unwrap();
        assert!((h_printed - 0.5).abs() > 1e-3, "printed preset is off-shell");
    }

    #[test]
    fn cyclic_coordinates_have_zero_force() {
        let g = Schwarzschild
            .grad_a(&[3.0, 17.0, 1.2], &[0.97, 0.1, -4.4])
            .unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[2], 0.0);
    }

    #[test]
    fn horizon_guard() {
        for r in [2.0, 1.0, 0.0, -3.0, 2.0 + 0.5e-9, f64::NAN] {
            let err = Schwarzschild.energy(&[0.0, r, 0.0], &[1.0, 0.0, 0.0]);
            assert!(matches!(err, Err(Error::Domain { .. })), "r = {r}");
        }
        assert!(Schwarzschild.energy(&[0.0, 2.1, 0.0], &[1.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let a = [
                rng.gen_range(-10.0..10.0),
                rng.gen_range(3.0..40.0),
                rng.gen_range(-7.0..7.0),
            ];
            let b = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-6.0..6.0),
            ];
            assert!(gradient_discrepancy(&Schwarzschild, &a, &b) <= 1e-6);
        }
    }
}
