//! Hamiltonian systems behind a single evaluation interface.
//!
//! A model evaluates `H(a, b)` and both partial gradients at arbitrary mixed
//! arguments: the extended integrator calls it at `(q, y)` and at `(x, p)`.

mod harmonic;
mod nls;
mod product;
mod schwarzschild;

pub use harmonic::Harmonic;
pub use nls::{nls_masses, NlsHamiltonian, NlsObservables};
pub use product::ProductHamiltonian;
pub use schwarzschild::{Schwarzschild, SchwarzschildPreset, HORIZON_MARGIN};

use crate::error::{Error, Result};

/// Evaluation interface for a Hamiltonian `H(a, b)` on `R^d × R^d`.
///
/// Implementations must be reentrant and free of side effects; the
/// integrators call them concurrently from worker threads.
pub trait Hamiltonian: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn energy(&self, a: &[f64], b: &[f64]) -> Result<f64>;

    /// Writes `∂H/∂a` into `da` and `∂H/∂b` into `db`.
    fn gradient(&self, a: &[f64], b: &[f64], da: &mut [f64], db: &mut [f64]) -> Result<()>;

    fn grad_a(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let mut da = vec![0.0; self.dim()];
        let mut db = vec![0.0; self.dim()];
        self.gradient(a, b, &mut da, &mut db)?;
        Ok(da)
    }

    fn grad_b(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let mut da = vec![0.0; self.dim()];
        let mut db = vec![0.0; self.dim()];
        self.gradient(a, b, &mut da, &mut db)?;
        Ok(db)
    }
}

impl<H: Hamiltonian + ?Sized> Hamiltonian for &H {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        (**self).energy(a, b)
    }
    fn gradient(&self, a: &[f64], b: &[f64], da: &mut [f64], db: &mut [f64]) -> Result<()> {
        (**self).gradient(a, b, da, db)
    }
}

impl<H: Hamiltonian + ?Sized> Hamiltonian for Box<H> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        (**self).energy(a, b)
    }
    fn gradient(&self, a: &[f64], b: &[f64], da: &mut [f64], db: &mut [f64]) -> Result<()> {
        (**self).gradient(a, b, da, db)
    }
}

/// Model names accepted in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Product1d,
    Schwarzschild,
    Nls,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Product1d => "product1d",
            ModelKind::Schwarzschild => "schwarzschild",
            ModelKind::Nls => "nls",
        }
    }

    /// Builds the model. `modes` is only used by the NLS truncation.
    pub fn build(self, modes: usize) -> Result<Box<dyn Hamiltonian>> {
        Ok(match self {
            ModelKind::Product1d => Box::new(ProductHamiltonian),
            ModelKind::Schwarzschild => Box::new(Schwarzschild),
            ModelKind::Nls => Box::new(NlsHamiltonian::new(modes)?),
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product1d" => Ok(ModelKind::Product1d),
            "schwarzschild" => Ok(ModelKind::Schwarzschild),
            "nls" => Ok(ModelKind::Nls),
            other => Err(Error::invalid(format!(
                "unknown system '{other}' (expected product1d, schwarzschild or nls)"
            ))),
        }
    }
}

pub(crate) fn check_dims(model: &dyn Hamiltonian, a: &[f64], b: &[f64]) -> Result<()> {
    let d = model.dim();
    for len in [a.len(), b.len()] {
        if len != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: len,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod testing {
    //! Central-difference gradient check shared by the model tests.
    use super::Hamiltonian;

    /// Largest relative discrepancy between the analytic gradient and a
    /// central difference with increment `1e-6 (1 + ‖arg‖)`.
    pub fn gradient_discrepancy(model: &dyn Hamiltonian, a: &[f64], b: &[f64]) -> f64 {
        let d = model.dim();
        let mut da = vec![0.0; d];
        let mut db = vec![0.0; d];
        model.gradient(a, b, &mut da, &mut db).unwrap();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut worst = 0.0_f64;
        for (which, analytic) in [(0, &da), (1, &db)] {
            let base = if which == 0 { a } else { b };
            let h = 1e-6 * (1.0 + norm(base));
            for i in 0..d {
                let mut plus = base.to_vec();
                let mut minus = base.to_vec();
                plus[i] += h;
                minus[i] -= h;
                let (ep, em) = if which == 0 {
                    (model.energy(&plus, b).unwrap(), model.energy(&minus, b).unwrap())
                } else {
                    (model.energy(a, &plus).unwrap(), model.energy(a, &minus).unwrap())
                };
                let fd = (ep - em) / (2.0 * h);
                let scale = analytic[i].abs().max(fd.abs()).max(1.0);
                worst = worst.max((analytic[i] - fd).abs() / scale);
            }
        }
        worst
    }
}
