use super::{check_dims, Hamiltonian};
use crate::error::{Error, Result};

/// Isotropic oscillator `H = Σ (a_i² + b_i²) / 2`. Used as a linear test system.
#[derive(Debug, Clone, Copy)]
pub struct Harmonic {
    dim: usize,
}

impl Harmonic {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("harmonic oscillator needs dim >= 1"));
        }
        Ok(Self { dim })
    }
}

impl Hamiltonian for Harmonic {
    fn name(&self) -> &str {
        "harmonic"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn energy(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_dims(self, a, b)?;
        Ok(0.5 * a.iter().chain(b).map(|v| v * v).sum::<f64>())
    }

    fn gradient(&self, a: &[f64], b: &[f64], da: &mut [f64], db: &mut [f64]) -> Result<()> {
        check_dims(self, a, b)?;
        da.copy_from_slice(a);
        db.copy_from_slice(b);
        Ok(())
    }
}
