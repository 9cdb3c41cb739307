use super::{check_dims, Hamiltonian};
use crate::error::Result;

/// One degree of freedom, `H(Q, P) = (Q² + 1)(P² + 1) / 2`.
///
/// Integrable with closed-form solution (see [`crate::oracles::exact_solution`])
/// but not separable, so ordinary leapfrog splitting does not apply.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProductHamiltonian;

impl Hamiltonian for ProductHamiltonian {
    fn name(&self) -> &str {
        "product1d"
    }

    fn dim(&self) -> usize {
        1
    }

    fn energy(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_dims(self, a, b)?;
        Ok(0.5 * (a[0] * a[0] + 1.0) * (b[0] * b[0] + 1.0))
    }

    fn gradient(&self, a: &[f64], b: &[f64], da: &mut [f64], db: &mut [f64]) -> Result<()> {
        check_dims(self, a, b)?;
        da[0] = a[0] * (b[0] * b[0] + 1.0);
        db[0] = b[0] * (a[0] * a[0] + 1.0);
        Ok(())
    }
}
