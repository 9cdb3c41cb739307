//! Running time averages of the NLS mode masses.

use crate::error::{Error, Result};
use crate::models::nls_masses;
use crate::state::PhaseTrajectory;

/// `⟨I_i⟩(t) = (1/t) ∫₀ᵗ I_i`, accumulated with the trapezoidal rule on the
/// sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicAverages {
    pub times: Vec<f64>,
    /// Instantaneous masses per sample and mode.
    pub masses: Vec<Vec<f64>>,
    /// Running averages per sample and mode. The first sample holds the
    /// instantaneous value (the `t → 0` limit).
    pub averages: Vec<Vec<f64>>,
    /// `⟨I_1⟩ − ⟨I_2⟩`
    pub gap: Vec<f64>,
}

impl ErgodicAverages {
    /// `|gap|` at the last sample with `time <= t`.
    pub fn gap_at(&self, t: f64) -> Option<f64> {
        let idx = self.times.partition_point(|s| *s <= t * (1.0 + 1e-12));
        idx.checked_sub(1).map(|i| self.gap[i].abs())
    }
}

pub fn ergodic_averages(traj: &PhaseTrajectory) -> Result<ErgodicAverages> {
    let Some(&t_end) = traj.times.last() else {
        return Err(Error::invalid("empty trajectory"));
    };
    if !(t_end > traj.times[0]) {
        return Err(Error::invalid("time average over a zero-length horizon is undefined"));
    }
    let masses: Vec<Vec<f64>> = traj
        .q
        .iter()
        .zip(&traj.p)
        .map(|(q, p)| nls_masses(q, p).map(|o| o.masses))
        .collect::<Result<_>>()?;
    let modes = masses[0].len();
    if modes < 2 {
        return Err(Error::invalid("ergodic averages need at least two modes"));
    }
    let t0 = traj.times[0];
    let mut integral = vec![0.0; modes];
    let mut averages = Vec::with_capacity(masses.len());
    averages.push(masses[0].clone());
    for k in 1..masses.len() {
        let h = traj.times[k] - traj.times[k - 1];
        for i in 0..modes {
            integral[i] += 0.5 * h * (masses[k - 1][i] + masses[k][i]);
        }
        let span = traj.times[k] - t0;
        averages.push(integral.iter().map(|v| v / span).collect());
    }
    let gap = averages.iter().map(|a| a[0] - a[1]).collect();
    Ok(ErgodicAverages {
        times: traj.times.clone(),
        masses,
        averages,
        gap,
    })
}
