//! Parameter scans and paired runs built from the integrator, the oracles and
//! the analysis routines. These back the CLI subcommands and the acceptance
//! checks.

use crate::analysis::{
    drift, energy_drift, energy_series, ergodic_averages, linear_fit, loglog_slope, orbit_error_scalings, polar_errors,
    scaled_running_max_errors, ErgodicAverages, LinearFit, PolarErrorSeries,
};
use crate::error::{Error, Result};
use crate::integrator::{Integrator, IntegratorConfig, LinearDamping};
use crate::models::{nls_masses, Hamiltonian, NlsHamiltonian, ProductHamiltonian, Schwarzschild, SchwarzschildPreset};
use crate::oracles::{
    reference_dissipative, reference_flow, rk4_integrate, Certificate, EllipticParams, ReferenceOptions,
};
use crate::par::{self, Execution};
use crate::scheme::GammaVariant;
use crate::state::{PhaseTrajectory, Projection, Trajectory};

/// Observer spacing used when comparing against the elliptic solution.
pub const POLAR_SAMPLE_INTERVAL: f64 = 0.01;

/// A run of the product system from `(q0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductRun {
    pub q0: f64,
    pub delta: f64,
    pub omega: f64,
    pub order: usize,
    pub t_end: f64,
    pub gamma: GammaVariant,
    pub projection: Projection,
}

impl ProductRun {
    pub fn new(q0: f64, delta: f64, omega: f64, order: usize, t_end: f64) -> Self {
        Self {
            q0,
            delta,
            omega,
            order,
            t_end,
            gamma: GammaVariant::Standard,
            projection: Projection::Copy1,
        }
    }

    pub fn config(&self) -> Result<IntegratorConfig> {
        Ok(IntegratorConfig::for_duration(self.delta, self.omega, self.order, self.t_end)?.with_gamma(self.gamma))
    }

    /// Observer stride giving roughly [`POLAR_SAMPLE_INTERVAL`] between samples.
    pub fn stride(&self) -> usize {
        ((POLAR_SAMPLE_INTERVAL / self.delta).round() as usize).max(1)
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        let cfg = self.config()?;
        Integrator::new(&ProductHamiltonian, cfg)?.integrate(&[self.q0], &[0.0], self.stride())
    }
}

/// Elliptic solution sampled at `times`.
pub fn exact_series(q0: f64, times: &[f64]) -> Result<PhaseTrajectory> {
    let params = EllipticParams::new(q0)?;
    let mut out = PhaseTrajectory::with_capacity(times.len());
    for &t in times {
        let (q, p) = params.solution(t)?;
        out.push(t, vec![q], vec![p]);
    }
    Ok(out)
}

/// Amplitude and phase errors of a product run against the exact solution.
pub fn product_polar_errors(run: &ProductRun) -> Result<PolarErrorSeries> {
    let numeric = run.trajectory()?.project(run.projection);
    let exact = exact_series(run.q0, &numeric.times)?;
    polar_errors(&numeric, &exact)
}

/// Largest phase-space distance to the exact solution over the samples.
pub fn product_max_error(run: &ProductRun) -> Result<f64> {
    let numeric = run.trajectory()?.project(run.projection);
    let exact = exact_series(run.q0, &numeric.times)?;
    Ok(numeric
        .q
        .iter()
        .zip(&numeric.p)
        .zip(exact.q.iter().zip(&exact.p))
        .map(|((a, b), (c, d))| (a[0] - c[0]).hypot(b[0] - d[0]))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanVariable {
    Omega,
    Delta,
}

impl ScanVariable {
    pub fn name(self) -> &'static str {
        match self {
            ScanVariable::Omega => "omega",
            ScanVariable::Delta => "delta",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub value: f64,
    pub amplitude_error: f64,
    pub phase_error: f64,
    /// Set when the scan point failed; the error columns are then NaN.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub variable: ScanVariable,
    pub rows: Vec<TableRow>,
    /// Log–log slopes, present when at least three rows succeeded.
    pub amplitude_slope: Option<f64>,
    pub phase_slope: Option<f64>,
}

/// Minimum number of surviving scan points for a slope fit.
pub const MIN_FIT_POINTS: usize = 3;

/// Polar errors of `base` with `variable` replaced by each of `values`.
pub fn error_table(base: &ProductRun, variable: ScanVariable, values: &[f64], exec: Execution) -> Result<ErrorTable> {
    if values.is_empty() {
        return Err(Error::invalid("scan list is empty"));
    }
    let rows = par::map(values, exec, |_, &v| {
        let mut run = *base;
        match variable {
            ScanVariable::Omega => run.omega = v,
            ScanVariable::Delta => run.delta = v,
        }
        match product_polar_errors(&run) {
            Ok(e) => TableRow {
                value: v,
                amplitude_error: e.max_amplitude_error(),
                phase_error: e.max_phase_error(),
                failure: None,
            },
            Err(e) => TableRow {
                value: v,
                amplitude_error: f64::NAN,
                phase_error: f64::NAN,
                failure: Some(e.to_string()),
            },
        }
    });
    let ok: Vec<&TableRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
    let (amplitude_slope, phase_slope) = if ok.len() >= MIN_FIT_POINTS {
        let x: Vec<f64> = ok.iter().map(|r| r.value).collect();
        let a: Vec<f64> = ok.iter().map(|r| r.amplitude_error).collect();
        let p: Vec<f64> = ok.iter().map(|r| r.phase_error).collect();
        (loglog_slope(&x, &a).ok(), loglog_slope(&x, &p).ok())
    } else {
        (None, None)
    };
    Ok(ErrorTable {
        variable,
        rows,
        amplitude_slope,
        phase_slope,
    })
}

/// Convergence of the composition of a given order: maximum phase-space error
/// against the exact solution for each step size, and the fitted order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStudy {
    pub order: usize,
    pub deltas: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

pub fn order_study(base: &ProductRun, deltas: &[f64], exec: Execution) -> Result<OrderStudy> {
    let errors = par::map(deltas, exec, |_, &d| {
        let mut run = *base;
        run.delta = d;
        product_max_error(&run)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let slope = loglog_slope(deltas, &errors)?;
    Ok(OrderStudy {
        order: base.order,
        deltas: deltas.to_vec(),
        errors,
        slope,
    })
}

/// `max_t ‖q − x‖` for each restraint strength.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyGapScan {
    pub omegas: Vec<f64>,
    pub max_gap: Vec<f64>,
    pub slope: f64,
}

pub fn copy_gap_scan(base: &ProductRun, omegas: &[f64], exec: Execution) -> Result<CopyGapScan> {
    let max_gap = par::map(omegas, exec, |_, &w| -> Result<f64> {
        let mut run = *base;
        run.omega = w;
        let cfg = run.config()?;
        let mut worst = 0.0_f64;
        Integrator::new(&ProductHamiltonian, cfg)?.run(&[run.q0], &[0.0], |_, _, s| {
            worst = worst.max(s.position_gap());
        })?;
        Ok(worst)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let slope = loglog_slope(omegas, &max_gap)?;
    Ok(CopyGapScan {
        omegas: omegas.to_vec(),
        max_gap,
        slope,
    })
}

/// Energy behaviour of the proposed method and RK4 at the same step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyComparison {
    pub times: Vec<f64>,
    /// `H̄(t) − H̄(0)` of the proposed method.
    pub proposed: Vec<f64>,
    /// `H(t) − H(0)` of the projected proposed solution.
    pub proposed_original: Vec<f64>,
    /// `H(t) − H(0)` of RK4.
    pub rk4: Vec<f64>,
    pub proposed_trend: LinearFit,
    pub rk4_trend: LinearFit,
}

impl EnergyComparison {
    pub fn proposed_max_oscillation(&self) -> f64 {
        self.proposed.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn rk4_terminal_drift(&self) -> f64 {
        self.rk4.last().map_or(0.0, |v| v.abs())
    }

    /// Fraction of consecutive sample pairs over which `|drift|` of RK4 does
    /// not decrease.
    pub fn rk4_monotone_fraction(&self) -> f64 {
        monotone_fraction(&self.rk4)
    }
}

/// Fraction of consecutive pairs with non-decreasing `|v|`.
pub fn monotone_fraction(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 1.0;
    }
    let up = v.windows(2).filter(|w| w[1].abs() >= w[0].abs()).count();
    up as f64 / (v.len() - 1) as f64
}

/// Paired energy runs of a general model from `(q0, p0)`.
pub fn energy_comparison(
    model: &dyn Hamiltonian,
    q0: &[f64],
    p0: &[f64],
    cfg: IntegratorConfig,
    stride: usize,
) -> Result<EnergyComparison> {
    let traj = Integrator::new(model, cfg)?.integrate(q0, p0, stride)?;
    let d = energy_drift(model, cfg.omega, &traj)?;
    let rk = rk4_integrate(model, None, q0, p0, cfg.delta, cfg.n_steps, stride)?;
    let rk4 = drift(&energy_series(model, &rk)?);
    let proposed_trend = linear_fit(&d.times, &d.extended)?;
    let rk4_trend = linear_fit(&rk.times, &rk4)?;
    Ok(EnergyComparison {
        times: d.times,
        proposed: d.extended,
        proposed_original: d.original,
        rk4,
        proposed_trend,
        rk4_trend,
    })
}

/// Which integrator produces a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Extended-phase-space composition.
    #[default]
    Proposed,
    /// Classical fourth-order Runge–Kutta on the original system.
    Rk4,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Rk4 => "rk4",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Method::Proposed),
            "rk4" => Ok(Method::Rk4),
            other => Err(Error::invalid(format!("unknown method '{other}' (expected proposed or rk4)"))),
        }
    }
}

/// Runs `model` with either method and returns the series in the original
/// phase space, sampled every `stride` steps and at the end.
pub fn run_projected(
    model: &dyn Hamiltonian,
    force: Option<&dyn crate::integrator::ForceModel>,
    q0: &[f64],
    p0: &[f64],
    cfg: IntegratorConfig,
    stride: usize,
    method: Method,
    projection: Projection,
) -> Result<PhaseTrajectory> {
    match method {
        Method::Proposed => {
            let mut integ = Integrator::new(model, cfg)?;
            if let Some(f) = force {
                integ = integ.with_force(f);
            }
            Ok(integ.integrate(q0, p0, stride)?.project(projection))
        }
        Method::Rk4 => rk4_integrate(model, force, q0, p0, cfg.delta, cfg.n_steps, stride),
    }
}

/// Truncated NLS run.
#[derive(Debug, Clone, PartialEq)]
pub struct NlsRun {
    pub q0: Vec<f64>,
    pub p0: Vec<f64>,
    pub delta: f64,
    pub omega: f64,
    pub order: usize,
    pub t_end: f64,
    /// Observer spacing in time.
    pub sample_interval: f64,
}

impl NlsRun {
    /// Two modes from `[q₁, p₁, q₂, p₂] = [3, 1, 0.01, 0]`, `δ = 0.01`, `ω = 100`.
    pub fn two_mode(t_end: f64) -> Self {
        Self {
            q0: vec![3.0, 0.01],
            p0: vec![1.0, 0.0],
            delta: 0.01,
            omega: 100.0,
            order: 4,
            t_end,
            sample_interval: 0.1,
        }
    }

    /// Five modes from `[q₁, p₁] = [3, 1]`, `[q_i, p_i] = [0.01, 0]`,
    /// `δ = 0.001`, `ω = 100`.
    pub fn cascade(t_end: f64) -> Self {
        let (q0, p0) = NlsHamiltonian::new(5).expect("five modes").cascade_initial_condition();
        Self {
            q0,
            p0,
            delta: 0.001,
            omega: 100.0,
            order: 4,
            t_end,
            sample_interval: 0.01,
        }
    }

    pub fn modes(&self) -> usize {
        self.q0.len()
    }

    pub fn config(&self) -> Result<IntegratorConfig> {
        IntegratorConfig::for_duration(self.delta, self.omega, self.order, self.t_end)
    }

    pub fn stride(&self) -> usize {
        ((self.sample_interval / self.delta).round() as usize).max(1)
    }
}

/// Observables of an NLS run.
#[derive(Debug, Clone, PartialEq)]
pub struct NlsSeries {
    pub trajectory: PhaseTrajectory,
    pub energy: Vec<f64>,
    pub total_mass: Vec<f64>,
    /// `None` when the horizon is zero.
    pub averages: Option<ErgodicAverages>,
}

impl NlsSeries {
    /// `max_t |I(t) − I(0)| / I(0)`; the absolute drift when `I(0) = 0`.
    pub fn relative_mass_drift(&self) -> f64 {
        let i0 = self.total_mass[0];
        let worst = self.total_mass.iter().fold(0.0_f64, |m, v| m.max((v - i0).abs()));
        if i0 > 0.0 {
            worst / i0
        } else {
            worst
        }
    }
}

pub fn nls_run(run: &NlsRun, method: Method) -> Result<NlsSeries> {
    let model = NlsHamiltonian::new(run.modes())?;
    if run.p0.len() != run.modes() {
        return Err(Error::DimensionMismatch {
            expected: run.modes(),
            got: run.p0.len(),
        });
    }
    let trajectory = run_projected(
        &model,
        None,
        &run.q0,
        &run.p0,
        run.config()?,
        run.stride(),
        method,
        Projection::Copy1,
    )?;
    let energy = energy_series(&model, &trajectory)?;
    let total_mass = trajectory
        .q
        .iter()
        .zip(&trajectory.p)
        .map(|(q, p)| nls_masses(q, p).map(|o| o.total))
        .collect::<Result<Vec<f64>>>()?;
    let averages = if trajectory.len() > 1 {
        Some(ergodic_averages(&trajectory)?)
    } else {
        None
    };
    Ok(NlsSeries {
        trajectory,
        energy,
        total_mass,
        averages,
    })
}

/// Largest growth factor `max_{i≥2} I_i(t) / I_i(0)` over the samples.
pub fn cascade_growth(series: &NlsSeries) -> Result<f64> {
    let traj = &series.trajectory;
    let first = nls_masses(&traj.q[0], &traj.p[0])?.masses;
    let mut growth = 0.0_f64;
    for (q, p) in traj.q.iter().zip(&traj.p) {
        let m = nls_masses(q, p)?.masses;
        for i in 1..m.len() {
            if first[i] > 0.0 {
                growth = growth.max(m[i] / first[i]);
            }
        }
    }
    Ok(growth)
}

/// `max_t ‖z(t) − z_ref(t)‖_∞ / max_t ‖z_ref(t)‖_∞` over samples at equal times.
pub fn relative_trajectory_error(numeric: &PhaseTrajectory, reference: &PhaseTrajectory) -> Result<f64> {
    if numeric.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: numeric.len(),
        });
    }
    let mut diff = 0.0_f64;
    let mut scale = 0.0_f64;
    for k in 0..numeric.len() {
        if (numeric.times[k] - reference.times[k]).abs() > 1e-9 * reference.times[k].abs().max(1.0) {
            return Err(Error::invalid("sample times differ"));
        }
        let a = numeric.q[k].iter().chain(&numeric.p[k]);
        let b = reference.q[k].iter().chain(&reference.p[k]);
        for (x, y) in a.zip(b) {
            diff = diff.max((x - y).abs());
            scale = scale.max(y.abs());
        }
    }
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// Schwarzschild orbit run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitRun {
    pub preset: SchwarzschildPreset,
    pub delta: f64,
    pub omega: f64,
    pub order: usize,
    pub t_end: f64,
    /// Linear friction coefficient; 0 for the conservative flow.
    pub damping: f64,
    pub sample_interval: f64,
}

impl OrbitRun {
    pub fn new(preset: SchwarzschildPreset, t_end: f64) -> Self {
        Self {
            preset,
            delta: 0.2,
            omega: 2.0,
            order: 4,
            t_end,
            damping: 0.0,
            sample_interval: 10.0,
        }
    }

    pub fn config(&self) -> Result<IntegratorConfig> {
        IntegratorConfig::for_duration(self.delta, self.omega, self.order, self.t_end)
    }

    pub fn stride(&self) -> usize {
        ((self.sample_interval / self.delta).round() as usize).max(1)
    }

    pub fn trajectory(&self, method: Method) -> Result<PhaseTrajectory> {
        let (q0, p0) = self.preset.initial_condition();
        let damping = LinearDamping::new(self.damping)?;
        let force: Option<&dyn crate::integrator::ForceModel> = if self.damping != 0.0 { Some(&damping) } else { None };
        run_projected(&Schwarzschild, force, &q0, &p0, self.config()?, self.stride(), method, Projection::Copy1)
    }
}

/// `max_t |v(t) − v(0)|` of `p_t` and `p_φ` along a series.
pub fn cyclic_momentum_drift(traj: &PhaseTrajectory) -> (f64, f64) {
    let (pt0, pphi0) = (traj.p[0][0], traj.p[0][2]);
    traj.p.iter().fold((0.0_f64, 0.0_f64), |(a, b), p| {
        (a.max((p[0] - pt0).abs()), b.max((p[2] - pphi0).abs()))
    })
}

/// Columns `t, r, φ, H` of an orbit series.
fn orbit_rows(traj: &PhaseTrajectory) -> Result<Vec<Vec<f64>>> {
    traj.times
        .iter()
        .zip(traj.q.iter().zip(&traj.p))
        .map(|(_, (q, p))| Ok(vec![q[0], q[1], q[2], Schwarzschild.energy(q, p)?]))
        .collect()
}

/// Running maxima of the scaled relative errors of `t, r, φ, H` for the
/// proposed method and for RK4 at equal gradient cost, both against a
/// certified benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitComparison {
    pub times: Vec<f64>,
    /// One running-maximum series per observable `t, r, φ, H`.
    pub proposed: Vec<Vec<f64>>,
    pub rk4: Vec<Vec<f64>>,
    pub rk4_delta: f64,
    pub benchmark: Certificate,
}

impl OrbitComparison {
    /// Final value of each running maximum.
    pub fn final_proposed(&self) -> Vec<f64> {
        self.proposed.iter().map(|c| c.last().copied().unwrap_or(0.0)).collect()
    }

    pub fn final_rk4(&self) -> Vec<f64> {
        self.rk4.iter().map(|c| c.last().copied().unwrap_or(0.0)).collect()
    }
}

/// Central mass used for the Keplerian period in the error scaling.
pub const KEPLER_MASS: f64 = 10.0;

pub fn orbit_comparison(run: &OrbitRun, reference: &ReferenceOptions) -> Result<OrbitComparison> {
    let cfg = run.config()?;
    let scheme = crate::scheme::build_scheme_with(cfg.order, cfg.gamma)?;
    let evals = scheme.gradient_evaluations() as f64;
    // RK4 spends four gradients per step
    let rk4_delta = cfg.delta * 4.0 / evals;
    let sample = run.stride() as f64 * cfg.delta;
    let t_end = cfg.duration();

    let proposed = run.trajectory(Method::Proposed)?;
    let rk4_steps_per_sample = ((sample / rk4_delta).round() as usize).max(1);
    let rk4_step = sample / rk4_steps_per_sample as f64;
    let rk4_n = (t_end / rk4_step).round() as usize;

    let (q0, p0) = run.preset.initial_condition();
    let damping = LinearDamping::new(run.damping)?;
    let force: Option<&dyn crate::integrator::ForceModel> = if run.damping != 0.0 { Some(&damping) } else { None };
    let rk4 = rk4_integrate(&Schwarzschild, force, &q0, &p0, rk4_step, rk4_n, rk4_steps_per_sample)?;
    let opts = ReferenceOptions {
        sample_interval: Some(sample),
        ..*reference
    };
    let bench = match force {
        Some(f) => reference_dissipative(&Schwarzschild, f, &q0, &p0, t_end, &opts)?,
        None => reference_flow(&Schwarzschild, &q0, &p0, t_end, &opts)?,
    };
    let scalings = orbit_error_scalings(q0[1], 0.0, KEPLER_MASS);
    let b = orbit_rows(&bench.trajectory)?;
    let n = b.len().min(proposed.len()).min(rk4.len());
    let pe = scaled_running_max_errors(&orbit_rows(&proposed)?[..n], &b[..n], &scalings)?;
    let re = scaled_running_max_errors(&orbit_rows(&rk4)?[..n], &b[..n], &scalings)?;
    Ok(OrbitComparison {
        times: bench.trajectory.times[..n].to_vec(),
        proposed: pe,
        rk4: re,
        rk4_delta: rk4_step,
        benchmark: bench.certificate,
    })
}
