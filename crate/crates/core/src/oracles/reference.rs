//! Classical RK4 on the original canonical equations, used both as the
//! non-symplectic comparator and, with a step-doubling certificate, as the
//! benchmark where no closed form exists.

use crate::error::{Error, Result};
use crate::integrator::ForceModel;
use crate::models::Hamiltonian;
use crate::state::PhaseTrajectory;

/// Right-hand side `q̇ = ∂_p H`, `ṗ = −∂_q H + F(q, p, t)`.
struct Field<'a> {
    model: &'a dyn Hamiltonian,
    force: Option<&'a dyn ForceModel>,
    dq: Vec<f64>,
    dp: Vec<f64>,
    f: Vec<f64>,
}

impl<'a> Field<'a> {
    fn new(model: &'a dyn Hamiltonian, force: Option<&'a dyn ForceModel>) -> Self {
        let d = model.dim();
        Self {
            model,
            force,
            dq: vec![0.0; d],
            dp: vec![0.0; d],
            f: vec![0.0; d],
        }
    }

    fn eval(&mut self, q: &[f64], p: &[f64], t: f64, kq: &mut [f64], kp: &mut [f64]) -> Result<()> {
        self.model.gradient(q, p, &mut self.dq, &mut self.dp)?;
        if let Some(force) = self.force {
            force.force(q, p, t, &mut self.f)?;
        }
        for i in 0..q.len() {
            kq[i] = self.dp[i];
            kp[i] = if self.force.is_some() {
                self.f[i] - self.dq[i]
            } else {
                -self.dq[i]
            };
        }
        if kq.iter().chain(kp.iter()).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { component: "rk4 vector field" })
        }
    }
}

/// Reusable RK4 stepper.
pub struct Rk4<'a> {
    field: Field<'a>,
    k: [Vec<f64>; 8],
    tq: Vec<f64>,
    tp: Vec<f64>,
}

impl<'a> Rk4<'a> {
    pub fn new(model: &'a dyn Hamiltonian, force: Option<&'a dyn ForceModel>) -> Self {
        let d = model.dim();
        Self {
            field: Field::new(model, force),
            k: std::array::from_fn(|_| vec![0.0; d]),
            tq: vec![0.0; d],
            tp: vec![0.0; d],
        }
    }

    pub fn step(&mut self, q: &mut [f64], p: &mut [f64], t: f64, h: f64) -> Result<()> {
        let d = q.len();
        let [k1q, k1p, k2q, k2p, k3q, k3p, k4q, k4p] = &mut self.k;
        self.field.eval(q, p, t, k1q, k1p)?;
        for i in 0..d {
            self.tq[i] = q[i] + 0.5 * h * k1q[i];
            self.tp[i] = p[i] + 0.5 * h * k1p[i];
        }
        self.field.eval(&self.tq, &self.tp, t + 0.5 * h, k2q, k2p)?;
        for i in 0..d {
            self.tq[i] = q[i] + 0.5 * h * k2q[i];
            self.tp[i] = p[i] + 0.5 * h * k2p[i];
        }
        self.field.eval(&self.tq, &self.tp, t + 0.5 * h, k3q, k3p)?;
        for i in 0..d {
            self.tq[i] = q[i] + h * k3q[i];
            self.tp[i] = p[i] + h * k3p[i];
        }
        self.field.eval(&self.tq, &self.tp, t + h, k4q, k4p)?;
        for i in 0..d {
            q[i] += h / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
            p[i] += h / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
        }
        Ok(())
    }
}

/// One classical RK4 step of the canonical equations of `model`.
pub fn rk4_step(model: &dyn Hamiltonian, q: &[f64], p: &[f64], delta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut q, mut p) = (q.to_vec(), p.to_vec());
    Rk4::new(model, None).step(&mut q, &mut p, 0.0, delta)?;
    Ok((q, p))
}

/// `n_steps` RK4 steps of size `delta`, sampling every `stride`-th step and
/// the final one.
pub fn rk4_integrate(
    model: &dyn Hamiltonian,
    force: Option<&dyn ForceModel>,
    q0: &[f64],
    p0: &[f64],
    delta: f64,
    n_steps: usize,
    stride: usize,
) -> Result<PhaseTrajectory> {
    let stride = stride.max(1);
    let mut rk = Rk4::new(model, force);
    let (mut q, mut p) = (q0.to_vec(), p0.to_vec());
    let mut out = PhaseTrajectory::with_capacity(n_steps / stride + 2);
    out.push(0.0, q.clone(), p.clone());
    for n in 0..n_steps {
        rk.step(&mut q, &mut p, n as f64 * delta, delta)
            .map_err(|e| Error::StepFailed {
                step: n + 1,
                last_valid: n,
                source: Box::new(e),
            })?;
        if (n + 1) % stride == 0 || n + 1 == n_steps {
            out.push((n + 1) as f64 * delta, q.clone(), p.clone());
        }
    }
    Ok(out)
}

/// Accuracy settings of the certified reference run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    /// Output spacing; `None` samples only the start and the end.
    pub sample_interval: Option<f64>,
    /// Accepted relative endpoint change between a step and its half.
    pub tolerance: f64,
    /// Step size of the first attempt.
    pub initial_step: f64,
    pub max_refinements: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            sample_interval: None,
            tolerance: 1e-11,
            initial_step: 1e-2,
            max_refinements: 10,
        }
    }
}

/// Step-doubling evidence attached to a reference run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Step of the accepted (finer) run.
    pub step: f64,
    pub n_steps: usize,
    /// Relative endpoint change against the run with twice the step.
    pub endpoint_change: f64,
    pub refinements: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRun {
    pub trajectory: PhaseTrajectory,
    pub certificate: Certificate,
}

fn endpoint_change(a: &PhaseTrajectory, b: &PhaseTrajectory) -> f64 {
    let (qa, pa) = a.last().expect("non-empty run");
    let (qb, pb) = b.last().expect("non-empty run");
    let mut diff = 0.0_f64;
    let mut scale = 0.0_f64;
    for (x, y) in qa.iter().chain(pa).zip(qb.iter().chain(pb)) {
        diff = diff.max((x - y).abs());
        scale = scale.max(y.abs());
    }
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Certified RK4 benchmark of the conservative flow.
pub fn reference_flow(
    model: &dyn Hamiltonian,
    q0: &[f64],
    p0: &[f64],
    t_end: f64,
    opts: &ReferenceOptions,
) -> Result<ReferenceRun> {
    reference_run(model, None, q0, p0, t_end, opts)
}

/// Certified RK4 benchmark of `ṗ = −∂_q H + F`.
pub fn reference_dissipative(
    model: &dyn Hamiltonian,
    force: &dyn ForceModel,
    q0: &[f64],
    p0: &[f64],
    t_end: f64,
    opts: &ReferenceOptions,
) -> Result<ReferenceRun> {
    reference_run(model, Some(force), q0, p0, t_end, opts)
}

fn reference_run(
    model: &dyn Hamiltonian,
    force: Option<&dyn ForceModel>,
    q0: &[f64],
    p0: &[f64],
    t_end: f64,
    opts: &ReferenceOptions,
) -> Result<ReferenceRun> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::invalid(format!("reference horizon must be finite and >= 0, got {t_end}")));
    }
    if q0.len() != model.dim() || p0.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: q0.len().max(p0.len()),
        });
    }
    if t_end == 0.0 {
        let mut trajectory = PhaseTrajectory::default();
        trajectory.push(0.0, q0.to_vec(), p0.to_vec());
        return Ok(ReferenceRun {
            trajectory,
            certificate: Certificate {
                step: 0.0,
                n_steps: 0,
                endpoint_change: 0.0,
                refinements: 0,
            },
        });
    }
    let samples = match opts.sample_interval {
        Some(dt) if dt > 0.0 => ((t_end / dt).round() as usize).max(1),
        _ => 1,
    };
    let span = t_end / samples as f64;
    let mut per_sample = ((span / opts.initial_step).ceil() as usize).max(1);

    let run = |per_sample: usize| -> Result<PhaseTrajectory> {
        let h = span / per_sample as f64;
        let mut rk = Rk4::new(model, force);
        let (mut q, mut p) = (q0.to_vec(), p0.to_vec());
        let mut out = PhaseTrajectory::with_capacity(samples + 1);
        out.push(0.0, q.clone(), p.clone());
        for s in 0..samples {
            let t0 = s as f64 * span;
            for k in 0..per_sample {
                rk.step(&mut q, &mut p, t0 + k as f64 * h, h)?;
            }
            out.push((s + 1) as f64 * span, q.clone(), p.clone());
        }
        Ok(out)
    };

    let mut coarse = run(per_sample)?;
    let mut change = f64::INFINITY;
    for refinement in 1..=opts.max_refinements {
        let fine = run(2 * per_sample)?;
        change = endpoint_change(&coarse, &fine);
        per_sample *= 2;
        if change <= opts.tolerance {
            return Ok(ReferenceRun {
                trajectory: fine,
                certificate: Certificate {
                    step: span / per_sample as f64,
                    n_steps: per_sample * samples,
                    endpoint_change: change,
                    refinements: refinement,
                },
            });
        }
        coarse = fine;
    }
    Err(Error::ReferenceDidNotConverge {
        change,
        refinements: opts.max_refinements,
    })
}

/// First time after `t = 0` at which `event(q, p)` changes sign along the
/// RK4 flow with step `h`, refined by bisection on the length of the final
/// partial RK4 step.
pub fn first_event_time<G>(
    model: &dyn Hamiltonian,
    q0: &[f64],
    p0: &[f64],
    h: f64,
    t_max: f64,
    event: G,
) -> Result<f64>
where
    G: Fn(&[f64], &[f64]) -> f64,
{
    let mut rk = Rk4::new(model, None);
    let (mut q, mut p) = (q0.to_vec(), p0.to_vec());
    // leave the starting surface before watching for a sign change
    rk.step(&mut q, &mut p, 0.0, h)?;
    let mut t = h;
    let mut g = event(&q, &p);
    while t < t_max {
        let (mut qn, mut pn) = (q.clone(), p.clone());
        rk.step(&mut qn, &mut pn, t, h)?;
        let gn = event(&qn, &pn);
        if g == 0.0 {
            return Ok(t);
        }
        if g.signum() != gn.signum() {
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let (mut qm, mut pm) = (q.clone(), p.clone());
                rk.step(&mut qm, &mut pm, t, mid)?;
                if event(&qm, &pm).signum() == g.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(t + 0.5 * (lo + hi));
        }
        q = qn;
        p = pn;
        g = gn;
        t += h;
    }
    Err(Error::invalid(format!("no event before t = {t_max}")))
}
