//! Exact sub-flows of the split extended Hamiltonian and the time-stepping
//! driver built on them.
//!
//! The extended Hamiltonian is `H(q, y) + H(x, p) + ω (‖q − x‖² + ‖p − y‖²)/2`.
//! Each of the three pieces has an explicit exact flow, so any composition of
//! them is explicit and symplectic in `(q, p, x, y)`.

use crate::error::{Error, Result};
use crate::models::Hamiltonian;
use crate::scheme::{build_scheme_with, CompositionScheme, GammaVariant, StageKind};
use crate::state::{ExtendedState, Trajectory};

/// Default bound on `‖state‖∞` beyond which a run is aborted.
pub const DEFAULT_ESCAPE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Step size in original time units.
    pub delta: f64,
    /// Binding strength of the restraint between the two copies.
    pub omega: f64,
    /// Even order of the composition.
    pub order: usize,
    pub n_steps: usize,
    pub gamma: GammaVariant,
}

impl IntegratorConfig {
    pub fn new(delta: f64, omega: f64, order: usize, n_steps: usize) -> Result<Self> {
        let cfg = Self {
            delta,
            omega,
            order,
            n_steps,
            gamma: GammaVariant::Standard,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Config covering `[0, t_end]` with `round(t_end / delta)` steps.
    pub fn for_duration(delta: f64, omega: f64, order: usize, t_end: f64) -> Result<Self> {
        if !(t_end >= 0.0) || !t_end.is_finite() {
            return Err(Error::invalid(format!("duration must be finite and >= 0, got {t_end}")));
        }
        if !(delta > 0.0) {
            return Err(Error::invalid(format!("delta must be > 0, got {delta}")));
        }
        Self::new(delta, omega, order, (t_end / delta).round() as usize)
    }

    pub fn with_gamma(mut self, gamma: GammaVariant) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(format!("delta must be finite and > 0, got {}", self.delta)));
        }
        if !(self.omega >= 0.0) || !self.omega.is_finite() {
            return Err(Error::invalid(format!("omega must be finite and >= 0, got {}", self.omega)));
        }
        if self.order < 2 || !self.order.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "order must be an even integer >= 2, got {}",
                self.order
            )));
        }
        Ok(())
    }

    /// `T = N δ`
    pub fn duration(&self) -> f64 {
        self.n_steps as f64 * self.delta
    }
}

/// Additive term on the momentum equations, `ṗ = −∂_q H + F(q, p, t)`.
pub trait ForceModel: Send + Sync {
    fn force(&self, position: &[f64], momentum: &[f64], t: f64, out: &mut [f64]) -> Result<()>;
}

/// `F ≡ 0`
#[derive(Debug, Clone, Copy, Default)]
pub struct NoForce;

impl ForceModel for NoForce {
    fn force(&self, _position: &[f64], _momentum: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|v| *v = 0.0);
        Ok(())
    }
}

/// Linear friction `F = −γ p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDamping {
    pub gamma: f64,
}

impl LinearDamping {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::invalid("damping coefficient must be finite"));
        }
        Ok(Self { gamma })
    }
}

impl ForceModel for LinearDamping {
    fn force(&self, _position: &[f64], momentum: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
        for (o, p) in out.iter_mut().zip(momentum) {
            *o = -self.gamma * p;
        }
        Ok(())
    }
}

/// Scratch buffers reused across stages.
#[derive(Debug, Clone)]
pub struct Workspace {
    da: Vec<f64>,
    db: Vec<f64>,
    force: Vec<f64>,
}

impl Workspace {
    pub fn new(dim: usize) -> Self {
        Self {
            da: vec![0.0; dim],
            db: vec![0.0; dim],
            force: vec![0.0; dim],
        }
    }
}

fn ensure_finite(v: &[f64], component: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { component })
    }
}

fn check_state(s: &ExtendedState, model: &dyn Hamiltonian) -> Result<()> {
    if s.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: s.dim(),
        });
    }
    Ok(())
}

/// Flow of `H(q, y)` for time `delta`, in place. With a force the `p` kick
/// becomes `δ (−∂_q H(q, y) + F(q, y, t))`.
pub fn flow_a_in_place(
    s: &mut ExtendedState,
    delta: f64,
    model: &dyn Hamiltonian,
    force: Option<(&dyn ForceModel, f64)>,
    ws: &mut Workspace,
) -> Result<()> {
    model.gradient(&s.q, &s.y, &mut ws.da, &mut ws.db)?;
    ensure_finite(&ws.da, "dH/dq at (q, y)")?;
    ensure_finite(&ws.db, "dH/dy at (q, y)")?;
    if let Some((f, t)) = force {
        f.force(&s.q, &s.y, t, &mut ws.force)?;
        ensure_finite(&ws.force, "external force at (q, y)")?;
        for i in 0..s.dim() {
            s.p[i] -= delta * (ws.da[i] - ws.force[i]);
        }
    } else {
        for i in 0..s.dim() {
            s.p[i] -= delta * ws.da[i];
        }
    }
    for i in 0..s.dim() {
        s.x[i] += delta * ws.db[i];
    }
    Ok(())
}

/// Flow of `H(x, p)` for time `delta`, in place.
pub fn flow_b_in_place(
    s: &mut ExtendedState,
    delta: f64,
    model: &dyn Hamiltonian,
    force: Option<(&dyn ForceModel, f64)>,
    ws: &mut Workspace,
) -> Result<()> {
    model.gradient(&s.x, &s.p, &mut ws.da, &mut ws.db)?;
    ensure_finite(&ws.da, "dH/dx at (x, p)")?;
    ensure_finite(&ws.db, "dH/dp at (x, p)")?;
    if let Some((f, t)) = force {
        f.force(&s.x, &s.p, t, &mut ws.force)?;
        ensure_finite(&ws.force, "external force at (x, p)")?;
        for i in 0..s.dim() {
            s.y[i] -= delta * (ws.da[i] - ws.force[i]);
        }
    } else {
        for i in 0..s.dim() {
            s.y[i] -= delta * ws.da[i];
        }
    }
    for i in 0..s.dim() {
        s.q[i] += delta * ws.db[i];
    }
    Ok(())
}

/// Flow of `ω H_C`: sums `(q + x, p + y)` are fixed and the differences
/// `(q − x, p − y)` rotate by the angle `2ωδ`.
pub fn flow_c_in_place(s: &mut ExtendedState, delta: f64, omega: f64) {
    if delta == 0.0 {
        return;
    }
    let (sin, cos) = (2.0 * omega * delta).sin_cos();
    for i in 0..s.dim() {
        let (sq, sp) = (s.q[i] + s.x[i], s.p[i] + s.y[i]);
        let (dq, dp) = (s.q[i] - s.x[i], s.p[i] - s.y[i]);
        let rq = cos * dq + sin * dp;
        let rp = -sin * dq + cos * dp;
        s.q[i] = 0.5 * (sq + rq);
        s.p[i] = 0.5 * (sp + rp);
        s.x[i] = 0.5 * (sq - rq);
        s.y[i] = 0.5 * (sp - rp);
    }
}

/// Time-`delta` flow of `H(q, y)`: `(q, p − δ ∂_q H(q, y), x + δ ∂_y H(q, y), y)`.
pub fn flow_a(s: &ExtendedState, delta: f64, model: &dyn Hamiltonian) -> Result<ExtendedState> {
    check_state(s, model)?;
    let mut out = s.clone();
    flow_a_in_place(&mut out, delta, model, None, &mut Workspace::new(s.dim()))?;
    Ok(out)
}

/// Time-`delta` flow of `H(x, p)`: `(q + δ ∂_p H(x, p), p, x, y − δ ∂_x H(x, p))`.
pub fn flow_b(s: &ExtendedState, delta: f64, model: &dyn Hamiltonian) -> Result<ExtendedState> {
    check_state(s, model)?;
    let mut out = s.clone();
    flow_b_in_place(&mut out, delta, model, None, &mut Workspace::new(s.dim()))?;
    Ok(out)
}

/// Time-`delta` flow of the restraint with strength `omega`.
pub fn flow_c(s: &ExtendedState, delta: f64, omega: f64) -> ExtendedState {
    let mut out = s.clone();
    flow_c_in_place(&mut out, delta, omega);
    out
}

/// Applies the stages of `scheme` left to right for a step of length
/// `delta` starting at time `t`.
pub fn apply_scheme(
    s: &mut ExtendedState,
    t: f64,
    delta: f64,
    omega: f64,
    scheme: &CompositionScheme,
    model: &dyn Hamiltonian,
    force: Option<&dyn ForceModel>,
    ws: &mut Workspace,
) -> Result<()> {
    // elapsed substep time per kind, used as the force's time argument
    let (mut ta, mut tb) = (t, t);
    for (index, stage) in scheme.stages().iter().enumerate() {
        let h = stage.fraction * delta;
        let res = match stage.kind {
            StageKind::A => {
                let r = flow_a_in_place(s, h, model, force.map(|f| (f, ta)), ws);
                ta += h;
                r
            }
            StageKind::B => {
                let r = flow_b_in_place(s, h, model, force.map(|f| (f, tb)), ws);
                tb += h;
                r
            }
            StageKind::C => {
                flow_c_in_place(s, h, omega);
                Ok(())
            }
        };
        res.map_err(|e| Error::Stage {
            stage: index,
            source: Box::new(e),
        })?;
    }
    Ok(())
}

/// One step of the composition method.
pub fn step(
    s: &ExtendedState,
    cfg: &IntegratorConfig,
    scheme: &CompositionScheme,
    model: &dyn Hamiltonian,
) -> Result<ExtendedState> {
    check_state(s, model)?;
    let mut out = s.clone();
    apply_scheme(&mut out, 0.0, cfg.delta, cfg.omega, scheme, model, None, &mut Workspace::new(s.dim()))?;
    Ok(out)
}

/// [`step`] with an external force inserted into the A-stage `p` kick and the
/// B-stage `y` kick. `t` is the time at the start of the step.
pub fn step_dissipative(
    s: &ExtendedState,
    t: f64,
    cfg: &IntegratorConfig,
    scheme: &CompositionScheme,
    model: &dyn Hamiltonian,
    force: &dyn ForceModel,
) -> Result<ExtendedState> {
    check_state(s, model)?;
    let mut out = s.clone();
    apply_scheme(
        &mut out,
        t,
        cfg.delta,
        cfg.omega,
        scheme,
        model,
        Some(force),
        &mut Workspace::new(s.dim()),
    )?;
    Ok(out)
}

/// Composition integrator bound to a model and configuration.
pub struct Integrator<'a> {
    model: &'a dyn Hamiltonian,
    config: IntegratorConfig,
    scheme: CompositionScheme,
    force: Option<&'a dyn ForceModel>,
    escape_bound: f64,
}

impl<'a> Integrator<'a> {
    pub fn new(model: &'a dyn Hamiltonian, config: IntegratorConfig) -> Result<Self> {
        config.validate()?;
        let scheme = build_scheme_with(config.order, config.gamma)?;
        Ok(Self {
            model,
            config,
            scheme,
            force: None,
            escape_bound: DEFAULT_ESCAPE_BOUND,
        })
    }

    pub fn with_force(mut self, force: &'a dyn ForceModel) -> Self {
        self.force = Some(force);
        self
    }

    pub fn with_escape_bound(mut self, bound: f64) -> Self {
        self.escape_bound = bound;
        self
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn scheme(&self) -> &CompositionScheme {
        &self.scheme
    }

    pub fn model(&self) -> &dyn Hamiltonian {
        self.model
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::new(self.model.dim())
    }

    /// Advances `s` by one step of signed length `delta` from time `t`.
    pub fn step_by(&self, s: &mut ExtendedState, t: f64, delta: f64, ws: &mut Workspace) -> Result<()> {
        apply_scheme(s, t, delta, self.config.omega, &self.scheme, self.model, self.force, ws)
    }

    /// Runs `n_steps` steps from the doubled embedding of `(q0, p0)`, calling
    /// `observer(step, t, state)` for every step index `0..=N`. Returns the
    /// final state.
    pub fn run<F>(&self, q0: &[f64], p0: &[f64], mut observer: F) -> Result<ExtendedState>
    where
        F: FnMut(usize, f64, &ExtendedState),
    {
        let mut s = ExtendedState::embed(q0, p0)?;
        check_state(&s, self.model)?;
        self.run_from(&mut s, |n, t, st| {
            observer(n, t, st);
            true
        })?;
        Ok(s)
    }

    /// Advances `s` in place. The observer may stop the run early by
    /// returning `false`; the number of completed steps is returned.
    pub fn run_from<F>(&self, s: &mut ExtendedState, mut observer: F) -> Result<usize>
    where
        F: FnMut(usize, f64, &ExtendedState) -> bool,
    {
        check_state(s, self.model)?;
        let delta = self.config.delta;
        let mut ws = self.workspace();
        if !observer(0, 0.0, s) {
            return Ok(0);
        }
        for n in 0..self.config.n_steps {
            let t = n as f64 * delta;
            self.step_by(s, t, delta, &mut ws).map_err(|e| Error::StepFailed {
                step: n + 1,
                last_valid: n,
                source: Box::new(e),
            })?;
            if !s.is_finite() {
                return Err(Error::StepFailed {
                    step: n + 1,
                    last_valid: n,
                    source: Box::new(Error::NonFinite { component: "state" }),
                });
            }
            let norm = s.norm_inf();
            if norm > self.escape_bound {
                return Err(Error::Escaped {
                    step: n + 1,
                    norm,
                    bound: self.escape_bound,
                });
            }
            if !observer(n + 1, (n + 1) as f64 * delta, s) {
                return Ok(n + 1);
            }
        }
        Ok(self.config.n_steps)
    }

    /// Samples every `stride`-th step; the final step is always included.
    pub fn integrate(&self, q0: &[f64], p0: &[f64], stride: usize) -> Result<Trajectory> {
        let stride = stride.max(1);
        let n_total = self.config.n_steps;
        let mut traj = Trajectory::default();
        self.run(q0, p0, |n, t, s| {
            if n % stride == 0 || n == n_total {
                traj.push(n, t, s.clone());
            }
        })?;
        Ok(traj)
    }
}

/// Integrates the doubled embedding of `(q0, p0)` and records every
/// `stride`-th state.
pub fn integrate(
    q0: &[f64],
    p0: &[f64],
    cfg: &IntegratorConfig,
    model: &dyn Hamiltonian,
    stride: usize,
) -> Result<Trajectory> {
    Integrator::new(model, *cfg)?.integrate(q0, p0, stride)
}

/// Value of the extended Hamiltonian at `s`.
pub fn extended_energy(model: &dyn Hamiltonian, omega: f64, s: &ExtendedState) -> Result<f64> {
    let ha = model.energy(&s.q, &s.y)?;
    let hb = model.energy(&s.x, &s.p)?;
    let gap = s.copy_gap();
    Ok(ha + hb + 0.5 * omega * gap * gap)
}

/// Vector field of the extended Hamiltonian, flattened as `[q̇, ṗ, ẋ, ẏ]`.
pub fn extended_vector_field(
    model: &dyn Hamiltonian,
    omega: f64,
    s: &ExtendedState,
) -> Result<Vec<f64>> {
    let d = s.dim();
    let mut da = vec![0.0; d];
    let mut db = vec![0.0; d];
    let mut out = vec![0.0; 4 * d];
    // H(q, y): ṗ gets −∂_q, ẋ gets +∂_y
    model.gradient(&s.q, &s.y, &mut da, &mut db)?;
    for i in 0..d {
        out[d + i] = -da[i] - omega * (s.q[i] - s.x[i]);
        out[2 * d + i] = db[i] + omega * (s.y[i] - s.p[i]);
    }
    // H(x, p): q̇ gets +∂_p, ẏ gets −∂_x
    model.gradient(&s.x, &s.p, &mut da, &mut db)?;
    for i in 0..d {
        out[i] = db[i] + omega * (s.p[i] - s.y[i]);
        out[3 * d + i] = -da[i] - omega * (s.x[i] - s.q[i]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{NlsHamiltonian, ProductHamiltonian};
    use crate::scheme::build_scheme;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// H(a, b) = b
    struct Drift;
    impl Hamiltonian for Drift {
        fn name(&self) -> &str {
            "drift"
        }
        fn dim(&self) -> usize {
            1
        }
        fn energy(&self, _a: &[f64], b: &[f64]) -> Result<f64> {
            Ok(b[0])
        }
        fn gradient(&self, _a: &[f64], _b: &[f64], da: &mut [f64], db: &mut [f64]) -> Result<()> {
            da[0] = 0.0;
            db[0] = 1.0;
            Ok(())
        }
    }

    /// H(a, b) = a
    struct Potential;
    impl Hamiltonian for Potential {
        fn name(&self) -> &str {
            "potential"
        }
        fn dim(&self) -> usize {
            1
        }
        fn energy(&self, a: &[f64], _b: &[f64]) -> Result<f64> {
            Ok(a[0])
        }
        fn gradient(&self, _a: &[f64], _b: &[f64], da: &mut [f64], db: &mut [f64]) -> Result<()> {
            da[0] = 1.0;
            db[0] = 0.0;
            Ok(())
        }
    }

    /// Gradient that blows up, for error-path tests.
    struct Broken;
    impl Hamiltonian for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn dim(&self) -> usize {
            1
        }
        fn energy(&self, _a: &[f64], _b: &[f64]) -> Result<f64> {
            Ok(f64::NAN)
        }
        fn gradient(&self, _a: &[f64], _b: &[f64], da: &mut [f64], db: &mut [f64]) -> Result<()> {
            da[0] = f64::NAN;
            db[0] = 0.0;
            Ok(())
        }
    }

    fn st(v: [f64; 4]) -> ExtendedState {
        ExtendedState::new(vec![v[0]], vec![v[1]], vec![v[2]], vec![v[3]]).unwrap()
    }

    #[test]
    fn flow_a_examples() {
        let s = flow_a(&st([-3.0, 0.0, -3.0, 0.0]), 0.1, &ProductHamiltonian).unwrap();
        assert_eq!(s.q, vec![-3.0]);
        assert_relative_eq!(s.p[0], 0.3, max_relative = 1e-15);
        assert_eq!(s.x, vec![-3.0]);
        assert_eq!(s.y, vec![0.0]);

        let s0 = st([0.7, -0.2, 1.1, 0.4]);
        assert_eq!(flow_a(&s0, 0.0, &ProductHamiltonian).unwrap(), s0);
        assert_eq!(flow_a(&st([0.0; 4]), 1.0, &Drift).unwrap(), st([0.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn flow_b_examples() {
        let s = flow_b(&st([-3.0, 0.0, -3.0, 0.0]), 0.1, &ProductHamiltonian).unwrap();
        assert_eq!(s.q, vec![-3.0]);
        assert_eq!(s.p, vec![0.0]);
        assert_eq!(s.x, vec![-3.0]);
        assert_relative_eq!(s.y[0], 0.3, max_relative = 1e-15);

        let s0 = st([0.7, -0.2, 1.1, 0.4]);
        assert_eq!(flow_b(&s0, 0.0, &ProductHamiltonian).unwrap(), s0);
        assert_eq!(flow_b(&st([0.0; 4]), 1.0, &Potential).unwrap(), st([0.0, 0.0, 0.0, -1.0]));
    }

    #[test]
    fn flow_c_examples() {
        let same = st([0.3, -1.2, 0.3, -1.2]);
        assert_eq!(flow_c(&same, 0.37, 11.0), same);

        let s0 = st([0.7, -0.2, 1.1, 0.4]);
        let full = flow_c(&s0, PI, 1.0);
        for (a, b) in full.to_vec().iter().zip(s0.to_vec()) {
            assert!((a - b).abs() < 1e-14);
        }

        let quarter = flow_c(&st([1.0, 0.0, 0.0, 0.0]), PI / 4.0, 1.0);
        let expect = [0.5, -0.5, 0.5, 0.5];
        for (a, b) in quarter.to_vec().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn flow_c_preserves_sums_and_difference_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let d = rng.gen_range(1..5);
            let v: Vec<f64> = (0..4 * d).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let s = ExtendedState::from_slice(&v).unwrap();
            let out = flow_c(&s, rng.gen_range(-2.0..2.0), rng.gen_range(0.0..50.0));
            for i in 0..d {
                assert!((out.q[i] + out.x[i] - (s.q[i] + s.x[i])).abs() <= 4.0 * f64::EPSILON * 10.0);
                assert!((out.p[i] + out.y[i] - (s.p[i] + s.y[i])).abs() <= 4.0 * f64::EPSILON * 10.0);
            }
            let before = s.copy_gap();
            let after = out.copy_gap();
            assert!((before - after).abs() <= 1e-14 * before.max(1e-300));
        }
    }

    #[test]
    fn non_finite_gradient_is_reported() {
        let err = flow_a(&st([0.0; 4]), 0.1, &Broken).unwrap_err();
        assert!(matches!(err, Error::NonFinite { component } if component.contains("dH/dq")));
        let err = flow_b(&st([0.0; 4]), 0.1, &Broken).unwrap_err();
        assert!(matches!(err, Error::NonFinite { component } if component.contains("dH/dx")));
    }

    #[test]
    fn step_failure_carries_stage_and_index() {
        let cfg = IntegratorConfig::new(0.1, 1.0, 2, 3).unwrap();
        let err = integrate(&[0.0], &[0.0], &cfg, &Broken, 1).unwrap_err();
        match err {
            Error::StepFailed { step, last_valid, source } => {
                assert_eq!((step, last_valid), (1, 0));
                assert!(matches!(*source, Error::Stage { stage: 0, .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn escape_guard() {
        // exponential growth: H = a b gives q̇ = q, ṗ = −p
        struct Saddle;
        impl Hamiltonian for Saddle {
            fn name(&self) -> &str {
                "saddle"
            }
            fn dim(&self) -> usize {
                1
            }
            fn energy(&self, a: &[f64], b: &[f64]) -> Result<f64> {
                Ok(a[0] * b[0])
            }
            fn gradient(&self, a: &[f64], b: &[f64], da: &mut [f64], db: &mut [f64]) -> Result<()> {
                da[0] = b[0];
                db[0] = a[0];
                Ok(())
            }
        }
        let cfg = IntegratorConfig::new(0.1, 1.0, 2, 100_000).unwrap();
        let integ = Integrator::new(&Saddle, cfg).unwrap().with_escape_bound(1e6);
        let err = integ.integrate(&[1.0], &[1.0], 10).unwrap_err();
        assert!(matches!(err, Error::Escaped { .. }), "{err:?}");
        assert!(err.is_numeric_abort());
    }

    #[test]
    fn zero_step_is_identity() {
        let scheme = build_scheme(4).unwrap();
        let integ = Integrator::new(&ProductHamiltonian, IntegratorConfig::new(0.1, 20.0, 4, 1).unwrap()).unwrap();
        let s0 = st([0.7, -0.2, 1.1, 0.4]);
        let mut s = s0.clone();
        integ.step_by(&mut s, 0.0, 0.0, &mut integ.workspace()).unwrap();
        assert_eq!(s, s0);
        assert_eq!(scheme.len(), 13);
    }

    #[test]
    fn step_is_time_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let nls = NlsHamiltonian::new(2).unwrap();
        for order in [2, 4, 6] {
            let cfg = IntegratorConfig::new(0.01, 20.0, order, 1).unwrap();
            let scheme = build_scheme(order).unwrap();
            for _ in 0..20 {
                let v: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let s0 = ExtendedState::from_slice(&v).unwrap();
                let fwd = step(&s0, &cfg, &scheme, &nls).unwrap();
                let back_cfg = IntegratorConfig { delta: -cfg.delta, ..cfg };
                let mut back = fwd.clone();
                apply_scheme(&mut back, 0.0, back_cfg.delta, cfg.omega, &scheme.reversed(), &nls, None, &mut Workspace::new(2)).unwrap();
                let scale = s0.norm_inf();
                for (a, b) in back.to_vec().iter().zip(s0.to_vec()) {
                    assert!((a - b).abs() <= 1e-12 * scale, "order {order}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn zero_force_is_bitwise_equal_to_conservative_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let nls = NlsHamiltonian::new(3).unwrap();
        let cfg = IntegratorConfig::new(0.01, 50.0, 4, 1).unwrap();
        let scheme = build_scheme(4).unwrap();
        for _ in 0..50 {
            let v: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let s0 = ExtendedState::from_slice(&v).unwrap();
            let a = step(&s0, &cfg, &scheme, &nls).unwrap();
            let b = step_dissipative(&s0, 0.0, &cfg, &scheme, &nls, &NoForce).unwrap();
            assert_eq!(a.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                       b.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn damping_enters_momentum_kicks_only() {
        let s0 = st([-3.0, 0.5, -3.0, 0.25]);
        let gamma = 0.1;
        let mut s = s0.clone();
        let damp = LinearDamping::new(gamma).unwrap();
        flow_a_in_place(&mut s, 0.1, &ProductHamiltonian, Some((&damp, 0.0)), &mut Workspace::new(1)).unwrap();
        // p ← p + δ(−∂_q H(q, y) − γ y)
        let expect_p = 0.5 + 0.1 * (-(-3.0) * (0.25f64 * 0.25 + 1.0) - gamma * 0.25);
        assert_relative_eq!(s.p[0], expect_p, max_relative = 1e-15);
        let plain = flow_a(&s0, 0.1, &ProductHamiltonian).unwrap();
        assert_eq!(s.x, plain.x);
    }

    #[test]
    fn integrate_zero_steps_returns_embedding() {
        let cfg = IntegratorConfig::new(0.1, 20.0, 4, 0).unwrap();
        let traj = integrate(&[-3.0], &[0.0], &cfg, &ProductHamiltonian, 1).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states[0], st([-3.0, 0.0, -3.0, 0.0]));
        assert_eq!(traj.times, vec![0.0]);
    }

    #[test]
    fn integrate_stride_keeps_final_sample() {
        let cfg = IntegratorConfig::new(0.1, 20.0, 2, 25).unwrap();
        let traj = integrate(&[-3.0], &[0.0], &cfg, &ProductHamiltonian, 10).unwrap();
        assert_eq!(traj.steps, vec![0, 10, 20, 25]);
        assert_relative_eq!(*traj.times.last().unwrap(), 2.5, max_relative = 1e-15);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = IntegratorConfig::new(0.01, 100.0, 4, 500).unwrap();
        let nls = NlsHamiltonian::new(2).unwrap();
        let a = integrate(&[3.0, 0.01], &[1.0, 0.0], &cfg, &nls, 7).unwrap();
        let b = integrate(&[3.0, 0.01], &[1.0, 0.0], &cfg, &nls, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(0.0, 1.0, 2, 1).is_err());
        assert!(IntegratorConfig::new(-0.1, 1.0, 2, 1).is_err());
        assert!(IntegratorConfig::new(0.1, -1.0, 2, 1).is_err());
        assert!(IntegratorConfig::new(0.1, 1.0, 3, 1).is_err());
        assert!(IntegratorConfig::new(f64::NAN, 1.0, 2, 1).is_err());
        let c = IntegratorConfig::for_duration(10f64.powf(-1.5), 20.0, 4, 100.0).unwrap();
        assert_eq!(c.n_steps, 3162);
    }

    #[test]
    fn extended_vector_field_matches_energy_gradient() {
        let model = NlsHamiltonian::new(2).unwrap();
        let omega = 3.0;
        let s = ExtendedState::from_slice(&[0.3, -0.4, 0.1, 0.2, -0.5, 0.6, 0.7, -0.8]).unwrap();
        let f = extended_vector_field(&model, omega, &s).unwrap();
        let flat = s.to_vec();
        let h = 1e-6;
        let d = 2;
        for k in 0..flat.len() {
            let mut plus = flat.clone();
            let mut minus = flat.clone();
            plus[k] += h;
            minus[k] -= h;
            let e = |v: &[f64]| extended_energy(&model, omega, &ExtendedState::from_slice(v).unwrap()).unwrap();
            let g = (e(&plus) - e(&minus)) / (2.0 * h);
            // ż = J ∇H with pairs (q, p) and (x, y)
            let (target, sign) = match k / d {
                0 => (d + k % d, -1.0),     // ∂H/∂q → ṗ = −g
                1 => (k % d, 1.0),          // ∂H/∂p → q̇ = g
                2 => (3 * d + k % d, -1.0), // ∂H/∂x → ẏ = −g
                _ => (2 * d + k % d, 1.0),  // ∂H/∂y → ẋ = g
            };
            assert!((f[target] - sign * g).abs() < 1e-7, "k={k}");
        }
    }
}
