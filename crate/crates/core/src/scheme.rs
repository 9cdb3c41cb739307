//! Symmetric splitting schemes built from the three exact sub-flows.
//!
//! The second-order base is the Strang palindrome
//! `A(½) B(½) C(1) B(½) A(½)`; order `l` is obtained from order `l − 2`
//! by the triple jump `(γ, 1 − 2γ, γ)`.

use crate::error::{Error, Result};

/// Which exact sub-flow a stage applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageKind {
    /// Flow of `H(q, y)`: kicks `p`, drifts `x`.
    A,
    /// Flow of `H(x, p)`: drifts `q`, kicks `y`.
    B,
    /// Flow of the restraint `ω (‖q − x‖² + ‖p − y‖²)/2`.
    C,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub kind: StageKind,
    /// Substep length as a multiple of the step size.
    pub fraction: f64,
}

impl Stage {
    pub fn new(kind: StageKind, fraction: f64) -> Self {
        Self { kind, fraction }
    }
}

/// Choice of triple-jump coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaVariant {
    /// `γ_l = 1 / (2 − 2^{1/(l−1)})`, which cancels the leading error term of
    /// the order-`(l−2)` method.
    #[default]
    Standard,
    /// `γ_l = 1 / (2 − 2^{1/(l+1)})`. Kept for comparison; it does not raise
    /// the order.
    Printed,
}

impl GammaVariant {
    pub fn name(self) -> &'static str {
        match self {
            GammaVariant::Standard => "standard",
            GammaVariant::Printed => "printed",
        }
    }
}

impl std::str::FromStr for GammaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(GammaVariant::Standard),
            "printed" => Ok(GammaVariant::Printed),
            other => Err(Error::invalid(format!(
                "unknown gamma variant '{other}' (expected standard or printed)"
            ))),
        }
    }
}

fn check_order(order: usize, min: usize) -> Result<()> {
    if !order.is_multiple_of(2) || order < min {
        return Err(Error::invalid(format!(
            "integrator order must be an even integer >= {min}, got {order}"
        )));
    }
    Ok(())
}

/// Triple-jump coefficient lifting order `order − 2` to `order`.
pub fn triple_jump_gamma(order: usize) -> Result<f64> {
    triple_jump_gamma_with(order, GammaVariant::Standard)
}

pub fn triple_jump_gamma_with(order: usize, variant: GammaVariant) -> Result<f64> {
    check_order(order, 4)?;
    let exponent = match variant {
        GammaVariant::Standard => 1.0 / (order as f64 - 1.0),
        GammaVariant::Printed => 1.0 / (order as f64 + 1.0),
    };
    Ok(1.0 / (2.0 - 2f64.powf(exponent)))
}

/// Ordered stages of one integrator step.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionScheme {
    order: usize,
    stages: Vec<Stage>,
}

impl CompositionScheme {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Sum of the fractions of one stage kind.
    pub fn total_fraction(&self, kind: StageKind) -> f64 {
        self.stages
            .iter()
            .filter(|s| s.kind == kind)
            .map(|s| s.fraction)
            .sum()
    }

    /// Number of model gradient evaluations per step (one per A or B stage).
    pub fn gradient_evaluations(&self) -> usize {
        self.stages.iter().filter(|s| s.kind != StageKind::C).count()
    }

    pub fn is_palindromic(&self) -> bool {
        let n = self.stages.len();
        (0..n / 2).all(|i| {
            let (a, b) = (self.stages[i], self.stages[n - 1 - i]);
            a.kind == b.kind && (a.fraction - b.fraction).abs() <= 1e-15 * a.fraction.abs().max(1.0)
        })
    }

    /// The same stages in reverse order.
    pub fn reversed(&self) -> Self {
        let mut stages = self.stages.clone();
        stages.reverse();
        Self {
            order: self.order,
            stages,
        }
    }

    /// Appends stages, merging a stage into its predecessor when the kinds
    /// agree.
    fn push_merged(stages: &mut Vec<Stage>, stage: Stage) {
        match stages.last_mut() {
            Some(last) if last.kind == stage.kind => last.fraction += stage.fraction,
            _ => stages.push(stage),
        }
    }
}

/// Builds the symmetric scheme of the given even order with the standard
/// triple-jump coefficient.
pub fn build_scheme(order: usize) -> Result<CompositionScheme> {
    build_scheme_with(order, GammaVariant::Standard)
}

pub fn build_scheme_with(order: usize, variant: GammaVariant) -> Result<CompositionScheme> {
    check_order(order, 2)?;
    let mut scheme = CompositionScheme {
        order: 2,
        stages: vec![
            Stage::new(StageKind::A, 0.5),
            Stage::new(StageKind::B, 0.5),
            Stage::new(StageKind::C, 1.0),
            Stage::new(StageKind::B, 0.5),
            Stage::new(StageKind::A, 0.5),
        ],
    };
    let mut current = 2;
    while current < order {
        current += 2;
        let gamma = triple_jump_gamma_with(current, variant)?;
        let mut stages = Vec::with_capacity(3 * scheme.stages.len());
        for scale in [gamma, 1.0 - 2.0 * gamma, gamma] {
            for s in &scheme.stages {
                CompositionScheme::push_merged(&mut stages, Stage::new(s.kind, s.fraction * scale));
            }
        }
        scheme = CompositionScheme {
            order: current,
            stages,
        };
    }
    Ok(scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_values() {
        let g4 = triple_jump_gamma(4).unwrap();
        assert_relative_eq!(g4, 1.3512071919596578, max_relative = 1e-15);
        assert_relative_eq!(g4, 1.0 / (2.0 - 2f64.cbrt()), max_relative = 1e-15);
        let g6 = triple_jump_gamma(6).unwrap();
        assert_relative_eq!(g6, 1.1746717580893635, max_relative = 1e-15);
        for l in (4..=20).step_by(2) {
            let g = triple_jump_gamma(l).unwrap();
            assert!(1.0 - 2.0 * g < 0.0, "middle substep runs backward");
            assert_eq!(2.0 * g + (1.0 - 2.0 * g), 1.0);
        }
    }

    #[test]
    fn printed_gamma_is_shifted_by_two_orders() {
        assert_eq!(
            triple_jump_gamma_with(4, GammaVariant::Printed).unwrap(),
            triple_jump_gamma_with(6, GammaVariant::Standard).unwrap()
        );
    }

    #[test]
    fn gamma_rejects_bad_orders() {
        for l in [0, 1, 2, 3, 5, 7] {
            assert!(triple_jump_gamma(l).is_err(), "order {l}");
        }
        assert!(build_scheme(0).is_err());
        assert!(build_scheme(3).is_err());
    }

    #[test]
    fn strang_base() {
        let s = build_scheme(2).unwrap();
        let fr: Vec<f64> = s.stages().iter().map(|s| s.fraction).collect();
        assert_eq!(fr, vec![0.5, 0.5, 1.0, 0.5, 0.5]);
        let kinds: Vec<StageKind> = s.stages().iter().map(|s| s.kind).collect();
        use StageKind::*;
        assert_eq!(kinds, vec![A, B, C, B, A]);
    }

    #[test]
    fn seam_merging_counts() {
        assert_eq!(build_scheme(4).unwrap().len(), 13);
        assert_eq!(build_scheme(6).unwrap().len(), 37);
        assert_eq!(build_scheme(8).unwrap().len(), 109);
    }

    #[test]
    fn consistency_and_symmetry() {
        for order in [2, 4, 6, 8] {
            for variant in [GammaVariant::Standard, GammaVariant::Printed] {
                let s = build_scheme_with(order, variant).unwrap();
                assert_eq!(s.order(), order);
                assert!(s.is_palindromic());
                for kind in [StageKind::A, StageKind::B, StageKind::C] {
                    assert_relative_eq!(s.total_fraction(kind), 1.0, epsilon = 1e-14);
                }
                assert!(s
                    .stages()
                    .windows(2)
                    .all(|w| w[0].kind != w[1].kind));
            }
        }
    }
}
