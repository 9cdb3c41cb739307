//! Points of the doubled phase space and projections back to the original one.

use crate::error::{Error, Result};

/// A point `(q, p, x, y)` of the extended phase space carrying the
/// symplectic form `dq ∧ dp + dx ∧ dy`.
///
/// `(q, p)` and `(x, y)` are two copies of the original system whose
/// positions and momenta are mixed by the split Hamiltonians.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ExtendedState {
    pub fn new(q: Vec<f64>, p: Vec<f64>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let d = q.len();
        if d == 0 {
            return Err(Error::invalid("extended state needs dimension d >= 1"));
        }
        for v in [&p, &x, &y] {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        Ok(Self { q, p, x, y })
    }

    /// Doubled embedding `(Q0, P0, Q0, P0)` of an initial condition.
    pub fn embed(q0: &[f64], p0: &[f64]) -> Result<Self> {
        Self::new(q0.to_vec(), p0.to_vec(), q0.to_vec(), p0.to_vec())
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            q: vec![0.0; dim],
            p: vec![0.0; dim],
            x: vec![0.0; dim],
            y: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Flattened `[q, p, x, y]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(4 * self.dim());
        v.extend_from_slice(&self.q);
        v.extend_from_slice(&self.p);
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.y);
        v
    }

    /// Inverse of [`ExtendedState::to_vec`].
    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.is_empty() || !v.len().is_multiple_of(4) {
            return Err(Error::invalid(format!(
                "flat extended state length {} is not a positive multiple of 4",
                v.len()
            )));
        }
        let d = v.len() / 4;
        Ok(Self {
            q: v[..d].to_vec(),
            p: v[d..2 * d].to_vec(),
            x: v[2 * d..3 * d].to_vec(),
            y: v[3 * d..].to_vec(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    pub fn norm_inf(&self) -> f64 {
        self.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max_i |q_i - x_i|` and `max_i |p_i - y_i|` combined as a Euclidean
    /// norm of the copy difference `(q - x, p - y)`.
    pub fn copy_gap(&self) -> f64 {
        let dq: f64 = self.q.iter().zip(&self.x).map(|(a, b)| (a - b).powi(2)).sum();
        let dp: f64 = self.p.iter().zip(&self.y).map(|(a, b)| (a - b).powi(2)).sum();
        (dq + dp).sqrt()
    }

    /// `‖q − x‖₂`
    pub fn position_gap(&self) -> f64 {
        self.q
            .iter()
            .zip(&self.x)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn iter(&self) -> impl Iterator<Item = &f64> {
        self.q.iter().chain(&self.p).chain(&self.x).chain(&self.y)
    }

    pub fn project(&self, policy: Projection) -> (Vec<f64>, Vec<f64>) {
        match policy {
            Projection::Copy1 => (self.q.clone(), self.p.clone()),
            Projection::Copy2 => (self.x.clone(), self.y.clone()),
            Projection::Mean => (
                self.q.iter().zip(&self.x).map(|(a, b)| 0.5 * (a + b)).collect(),
                self.p.iter().zip(&self.y).map(|(a, b)| 0.5 * (a + b)).collect(),
            ),
        }
    }
}

/// Which pair of extended coordinates is reported as the solution of the
/// original system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Projection {
    /// `(q, p)`
    #[default]
    Copy1,
    /// `((q + x)/2, (p + y)/2)`
    Mean,
    /// `(x, y)`
    Copy2,
}

impl Projection {
    pub fn name(self) -> &'static str {
        match self {
            Projection::Copy1 => "copy1",
            Projection::Mean => "mean",
            Projection::Copy2 => "copy2",
        }
    }
}

impl std::str::FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "copy1" | "qp" => Ok(Projection::Copy1),
            "mean" => Ok(Projection::Mean),
            "copy2" | "xy" => Ok(Projection::Copy2),
            other => Err(Error::invalid(format!(
                "unknown projection policy '{other}' (expected copy1, mean or copy2)"
            ))),
        }
    }
}

/// Time-stamped samples of an extended trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ExtendedState>,
    /// Index of the integration step each sample was taken at.
    pub steps: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, step: usize, t: f64, s: ExtendedState) {
        self.steps.push(step);
        self.times.push(t);
        self.states.push(s);
    }

    pub fn last(&self) -> Option<&ExtendedState> {
        self.states.last()
    }

    pub fn project(&self, policy: Projection) -> PhaseTrajectory {
        let mut out = PhaseTrajectory::with_capacity(self.len());
        for (t, s) in self.times.iter().zip(&self.states) {
            let (q, p) = s.project(policy);
            out.push(*t, q, p);
        }
        out
    }
}

/// Time series in the original phase space.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseTrajectory {
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
}

impl PhaseTrajectory {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            p: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, q: Vec<f64>, p: Vec<f64>) {
        self.times.push(t);
        self.q.push(q);
        self.p.push(p);
    }

    pub fn last(&self) -> Option<(&[f64], &[f64])> {
        Some((self.q.last()?.as_slice(), self.p.last()?.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embed_doubles_the_initial_condition() {
        let s = ExtendedState::embed(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(s.x, s.q);
        assert_eq!(s.y, s.p);
        assert_eq!(s.copy_gap(), 0.0);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let err = ExtendedState::new(vec![0.0], vec![0.0, 1.0], vec![0.0], vec![0.0]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        assert!(ExtendedState::new(vec![], vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let s = ExtendedState::new(vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0], vec![7.0, 8.0])
            .unwrap();
        assert_eq!(ExtendedState::from_slice(&s.to_vec()).unwrap(), s);
    }

    #[test]
    fn projections() {
        let s = ExtendedState::new(vec![1.0], vec![2.0], vec![3.0], vec![4.0]).unwrap();
        assert_eq!(s.project(Projection::Copy1), (vec![1.0], vec![2.0]));
        assert_eq!(s.project(Projection::Copy2), (vec![3.0], vec![4.0]));
        assert_eq!(s.project(Projection::Mean), (vec![2.0], vec![3.0]));
        assert_eq!("mean".parse::<Projection>().unwrap(), Projection::Mean);
        assert!("median".parse::<Projection>().is_err());
    }
}
