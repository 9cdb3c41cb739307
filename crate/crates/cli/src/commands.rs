//! One function per subcommand. Each reads a resolved [`Config`], writes its
//! files under `out` and returns the summary lines it also records in the
//! sidecar.

use std::path::Path;

use bindsym::analysis::{chaos_statistic, linear_fit, poincare_section, IcGrid, PoincareConfig};
use bindsym::checks::{run_check_seeded, CHECKS};
use bindsym::experiments::{
    cyclic_momentum_drift, error_table, nls_run, orbit_comparison, run_projected, Method, NlsRun, OrbitRun,
    ProductRun, ScanVariable,
};
use bindsym::models::nls_masses;
use bindsym::oracles::ReferenceOptions;
use bindsym::{extended_energy, Execution, ExtendedState, ForceModel, Integrator, LinearDamping, ModelKind};

use crate::config::Config;
use crate::error::{CliError, EXIT_CHECK};
use crate::output::{indexed, num, Csv, Meta};

/// Summary lines, and the error that ended the run early if any. Files are
/// written in both cases.
pub type Report = (Meta, Option<CliError>);

fn damping(c: &Config) -> Result<Option<LinearDamping>, CliError> {
    let g = c.damping.unwrap_or(0.0);
    Ok(if g != 0.0 { Some(LinearDamping::new(g)?) } else { None })
}

fn initial(c: &Config) -> (Vec<f64>, Vec<f64>) {
    (c.q0.clone().unwrap_or_default(), c.p0.clone().unwrap_or_default())
}

fn abort(meta: &mut Meta, e: CliError) -> Option<CliError> {
    meta.push("status", format!("aborted: {}", e.message));
    Some(e)
}

pub fn integrate(c: &Config, out: &Path) -> Result<Report, CliError> {
    let model = c.model()?;
    let cfg = c.integrator()?;
    let force = damping(c)?;
    let mut integ = Integrator::new(model.as_ref(), cfg)?.with_escape_bound(c.escape_bound.unwrap_or(bindsym::DEFAULT_ESCAPE_BOUND));
    if let Some(f) = &force {
        integ = integ.with_force(f);
    }
    let projection = c.projection_kind()?;
    let d = model.dim();
    let mut header = vec!["t".to_string()];
    for name in ["q", "p", "x", "y"] {
        header.extend(indexed(name, d));
    }
    header.extend(["H".into(), "Hbar".into()]);
    let mut csv = Csv::new(&header);

    let stride = c.stride_steps();
    let mut rows = 0usize;
    let mut eval_error = None;
    let (q0, p0) = initial(c);
    let mut s = ExtendedState::embed(&q0, &p0)?;
    let result = integ.run_from(&mut s, |n, t, st| {
        if n % stride != 0 && n != cfg.n_steps {
            return true;
        }
        let (q, p) = st.project(projection);
        let energies = model
            .energy(&q, &p)
            .and_then(|h| extended_energy(model.as_ref(), cfg.omega, st).map(|hb| (h, hb)));
        match energies {
            Ok((h, hb)) => {
                let mut row = vec![t];
                for part in [&st.q, &st.p, &st.x, &st.y] {
                    row.extend_from_slice(part);
                }
                row.extend([h, hb]);
                csv.row(&row);
                rows += 1;
                true
            }
            Err(e) => {
                eval_error = Some(e);
                false
            }
        }
    });
    csv.write(&out.join("trajectory.csv"))?;

    let mut meta = Meta::new("integrate");
    meta.push("rows", rows);
    meta.push("stride", stride);
    let err = match (result, eval_error) {
        (Err(e), _) | (Ok(_), Some(e)) => abort(&mut meta, e.into()),
        (Ok(n), None) => {
            meta.push("status", format!("ok, {n} steps"));
            None
        }
    };
    Ok((meta, err))
}

fn sanitize(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

pub fn table(c: &Config, out: &Path) -> Result<Report, CliError> {
    if c.system_kind()? != ModelKind::Product1d {
        return Err(CliError::config("system: table needs product1d, the only system with an exact solution"));
    }
    let cfg = c.integrator()?;
    let (q0, _) = initial(c);
    let mut base = ProductRun::new(q0[0], cfg.delta, cfg.omega, cfg.order, cfg.duration());
    base.gamma = cfg.gamma;
    base.projection = c.projection_kind()?;
    let scans: Vec<(ScanVariable, &Vec<f64>)> = [(ScanVariable::Omega, &c.omegas), (ScanVariable::Delta, &c.deltas)]
        .into_iter()
        .filter_map(|(v, l)| l.as_ref().map(|l| (v, l)))
        .collect();
    if scans.is_empty() {
        return Err(CliError::config("deltas, omegas: table needs at least one scan list"));
    }
    let mut meta = Meta::new("table");
    for (variable, values) in scans {
        if values.is_empty() {
            return Err(CliError::config(format!("{}s: scan list is empty", variable.name())));
        }
        let t = error_table(&base, variable, values, Execution::Parallel)?;
        let name = variable.name();
        let mut csv = Csv::new(&[name, "amplitude_error", "phase_error", "failure"]);
        for r in &t.rows {
            let failure = r.failure.as_deref().map(sanitize).unwrap_or_default();
            csv.raw_row(&[num(r.value), num(r.amplitude_error), num(r.phase_error), failure]);
            if let Some(f) = &r.failure {
                meta.push(&format!("{name} {} failed", r.value), f);
            }
        }
        csv.write(&out.join(format!("table_{name}.csv")))?;
        let fit_path = out.join(format!("table_{name}_fit.csv"));
        match (t.amplitude_slope, t.phase_slope) {
            (Some(a), Some(p)) => {
                let mut fit = Csv::new(&["quantity", "slope"]);
                fit.raw_row(&["amplitude".to_string(), num(a)]);
                fit.raw_row(&["phase".to_string(), num(p)]);
                fit.write(&fit_path)?;
                meta.push(&format!("{name} slope"), format!("amplitude {a:.4}, phase {p:.4}"));
            }
            _ => {
                // a stale fit from an earlier run must not survive
                let _ = std::fs::remove_file(&fit_path);
                meta.push(&format!("{name} slope"), "not fitted (fewer than 3 successful rows)");
            }
        }
    }
    Ok((meta, None))
}

pub fn poincare(c: &Config, out: &Path) -> Result<Report, CliError> {
    let model = c.model()?;
    let cfg = c.integrator()?;
    let mut pc = PoincareConfig::product_shell(cfg.omega);
    pc.delta = cfg.delta;
    pc.order = cfg.order;
    if let Some(s) = c.shell {
        pc.shell = s;
    }
    if let Some(n) = c.crossings {
        pc.crossings = n;
    }
    if let Some(n) = c.grid {
        pc.grid = IcGrid { nq: n, np: n, ..pc.grid };
    }
    if let Some(t) = c.max_time {
        pc.max_time = t;
    }
    let section = poincare_section(model.as_ref(), &pc, Execution::Parallel)?;
    let stat = chaos_statistic(&section, Execution::Parallel);

    let mut points = Csv::new(&["trajectory", "crossing", "q", "p", "y", "t"]);
    for p in section.points() {
        points.raw_row(&[p.trajectory.to_string(), p.crossing.to_string(), num(p.q), num(p.p), num(p.y), num(p.time)]);
    }
    points.write(&out.join("section.csv"))?;

    let mut per = Csv::new(&["trajectory", "q0", "p0", "y0", "points", "dropped", "dimension", "escaped"]);
    for (i, (start, tr)) in section.starts.iter().zip(&section.trajectories).enumerate() {
        per.raw_row(&[
            i.to_string(),
            num(start.state.q[0]),
            num(start.state.p[0]),
            num(start.state.y[0]),
            tr.points.len().to_string(),
            tr.dropped.to_string(),
            stat.per_trajectory[i].map(num).unwrap_or_default(),
            tr.escaped.as_deref().map(sanitize).unwrap_or_default(),
        ]);
    }
    per.write(&out.join("trajectories.csv"))?;

    let mut skipped = Csv::new(&["q", "p", "reason"]);
    for s in &section.skipped {
        skipped.raw_row(&[num(s.q), num(s.p), sanitize(&s.reason)]);
    }
    skipped.write(&out.join("skipped.csv"))?;

    let mut meta = Meta::new("poincare");
    meta.push("initial conditions", section.starts.len());
    meta.push("skipped grid points", section.skipped.len());
    meta.push("section points", section.total_points());
    meta.push("dropped crossings", section.dropped());
    meta.push("median scatter dimension", format!("{:.4}", stat.median_dimension));
    meta.push("scored trajectories", stat.scored);
    meta.push("classification", stat.classify().name());
    Ok((meta, None))
}

pub fn nls(c: &Config, out: &Path) -> Result<Report, CliError> {
    if c.system_kind()? != ModelKind::Nls {
        return Err(CliError::config("system: nls command needs system = \"nls\""));
    }
    let cfg = c.integrator()?;
    let (q0, p0) = initial(c);
    let run = NlsRun {
        q0,
        p0,
        delta: cfg.delta,
        omega: cfg.omega,
        order: cfg.order,
        t_end: cfg.duration(),
        sample_interval: c.stride_steps() as f64 * cfg.delta,
    };
    let series = nls_run(&run, Method::Proposed)?;
    let n = run.modes();
    let mut header = vec!["t".to_string(), "H".into(), "I".into()];
    header.extend((1..=n).map(|i| format!("I{i}")));
    header.extend((1..=n).map(|i| format!("avg_I{i}")));
    header.push("gap".into());
    let mut csv = Csv::new(&header);
    let traj = &series.trajectory;
    for k in 0..traj.len() {
        let masses = nls_masses(&traj.q[k], &traj.p[k])?.masses;
        let avg = series.averages.as_ref().map_or(masses.clone(), |a| a.averages[k].clone());
        let gap = series.averages.as_ref().map_or(masses[0] - masses[1], |a| a.gap[k]);
        let mut row = vec![traj.times[k], series.energy[k], series.total_mass[k]];
        row.extend(masses);
        row.extend(avg);
        row.push(gap);
        csv.row(&row);
    }
    csv.write(&out.join("nls.csv"))?;
    let mut meta = Meta::new("nls");
    meta.push("samples", traj.len());
    meta.push("relative mass drift", format!("{:.6e}", series.relative_mass_drift()));
    if let Some(g) = series.averages.as_ref().and_then(|a| a.gap.last()) {
        meta.push("final gap", format!("{g:.6e}"));
    }
    Ok((meta, None))
}

fn fit_summary(times: &[f64], v: &[f64]) -> String {
    match linear_fit(times, v) {
        Ok(f) => format!("{:.3e} ± {:.3e}", f.slope, f.slope_stderr),
        Err(_) => "n/a".into(),
    }
}

pub fn compare(c: &Config, out: &Path) -> Result<Report, CliError> {
    let kind = c.system_kind()?;
    let baseline = c.baseline_kind()?;
    if kind == ModelKind::Schwarzschild && baseline == Method::Rk4 {
        return compare_orbit(c, out);
    }
    let model = c.model()?;
    let cfg = c.integrator()?;
    let force = damping(c)?;
    let force_ref: Option<&dyn ForceModel> = force.as_ref().map(|f| f as &dyn ForceModel);
    let projection = c.projection_kind()?;
    let stride = c.stride_steps();
    let (q0, p0) = initial(c);

    let mut integ = Integrator::new(model.as_ref(), cfg)?.with_escape_bound(c.escape_bound.unwrap_or(bindsym::DEFAULT_ESCAPE_BOUND));
    if let Some(f) = force_ref {
        integ = integ.with_force(f);
    }
    let ext = integ.integrate(&q0, &p0, stride)?;
    let proposed = ext.project(projection);
    let other = run_projected(model.as_ref(), force_ref, &q0, &p0, cfg, stride, baseline, projection)?;
    if other.len() != proposed.len() {
        return Err(CliError::io("baseline and proposed sample grids differ"));
    }

    let hbar0 = extended_energy(model.as_ref(), cfg.omega, &ext.states[0])?;
    let h0 = model.energy(&proposed.q[0], &proposed.p[0])?;
    let hb0 = model.energy(&other.q[0], &other.p[0])?;
    let mut csv = Csv::new(&["t", "Hbar_drift", "H_drift", "baseline_H_drift", "state_difference"]);
    let (mut hbar_d, mut base_d) = (Vec::new(), Vec::new());
    let mut max_diff = 0.0_f64;
    for k in 0..proposed.len() {
        let hb = extended_energy(model.as_ref(), cfg.omega, &ext.states[k])? - hbar0;
        let h = model.energy(&proposed.q[k], &proposed.p[k])? - h0;
        let b = model.energy(&other.q[k], &other.p[k])? - hb0;
        let diff = proposed.q[k]
            .iter()
            .chain(&proposed.p[k])
            .zip(other.q[k].iter().chain(&other.p[k]))
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        max_diff = max_diff.max(diff);
        hbar_d.push(hb);
        base_d.push(b);
        csv.row(&[proposed.times[k], hb, h, b, diff]);
    }
    csv.write(&out.join("compare.csv"))?;

    let osc = hbar_d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let terminal = base_d.last().map_or(0.0, |v| v.abs());
    let mut meta = Meta::new("compare");
    meta.push("baseline", baseline.name());
    meta.push("proposed max |Hbar drift|", format!("{osc:.6e}"));
    meta.push("proposed Hbar drift slope", fit_summary(&proposed.times, &hbar_d));
    meta.push("baseline terminal |H drift|", format!("{terminal:.6e}"));
    meta.push("baseline H drift slope", fit_summary(&other.times, &base_d));
    meta.push("drift ratio baseline/proposed", format!("{:.4}", terminal / osc));
    meta.push("max state difference", format!("{max_diff:.6e}"));
    Ok((meta, None))
}

fn compare_orbit(c: &Config, out: &Path) -> Result<Report, CliError> {
    let preset = c.orbit_preset_kind()?;
    let (q0, p0) = initial(c);
    if (q0.clone(), p0.clone()) != preset.initial_condition() {
        return Err(CliError::config("q0, p0: schwarzschild compare runs from orbit_preset; remove q0 and p0"));
    }
    let cfg = c.integrator()?;
    let run = OrbitRun {
        preset,
        delta: cfg.delta,
        omega: cfg.omega,
        order: cfg.order,
        t_end: cfg.duration(),
        damping: c.damping.unwrap_or(0.0),
        sample_interval: c.stride_steps() as f64 * cfg.delta,
    };
    let cmp = orbit_comparison(&run, &ReferenceOptions::default())?;
    let cols = ["t", "r", "phi", "H"];
    let mut header = vec!["time".to_string()];
    header.extend(cols.iter().map(|n| format!("proposed_{n}_error")));
    header.extend(cols.iter().map(|n| format!("rk4_{n}_error")));
    let mut csv = Csv::new(&header);
    for k in 0..cmp.times.len() {
        let mut row = vec![cmp.times[k]];
        row.extend(cmp.proposed.iter().map(|s| s[k]));
        row.extend(cmp.rk4.iter().map(|s| s[k]));
        csv.row(&row);
    }
    csv.write(&out.join("compare.csv"))?;

    let list = |v: Vec<f64>| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ");
    let mut meta = Meta::new("compare");
    meta.push("baseline", format!("rk4 at equal gradient cost, step {:.6}", cmp.rk4_delta));
    meta.push(
        "benchmark",
        format!(
            "step {:e}, {} steps, endpoint change {:.3e}",
            cmp.benchmark.step, cmp.benchmark.n_steps, cmp.benchmark.endpoint_change
        ),
    );
    meta.push("final proposed errors t r phi H", list(cmp.final_proposed()));
    meta.push("final rk4 errors t r phi H", list(cmp.final_rk4()));
    if run.damping == 0.0 {
        let (dt, dphi) = cyclic_momentum_drift(&run.trajectory(Method::Proposed)?);
        meta.push("cyclic momentum drift p_t p_phi", format!("{dt:.3e} {dphi:.3e}"));
    }
    Ok((meta, None))
}

pub fn check(c: &Config, out: &Path) -> Result<Report, CliError> {
    let ids: Vec<usize> = c.checks.clone().unwrap_or_else(|| CHECKS.iter().map(|c| c.0).collect());
    let seed = c.seed.unwrap_or(bindsym::checks::DEFAULT_SEED);
    let mut text = String::new();
    let mut failed = Vec::new();
    let mut meta = Meta::new("check");
    for id in ids {
        let o = run_check_seeded(id, Execution::Parallel, seed);
        println!("{o}");
        text.push_str(&format!("{o}\n"));
        meta.push(&format!("check {id}"), if o.passed { "pass" } else { "fail" });
        if !o.passed {
            failed.push(id.to_string());
        }
    }
    std::fs::write(out.join("check.txt"), text)?;
    let err = if failed.is_empty() {
        None
    } else {
        Some(CliError {
            code: EXIT_CHECK,
            message: format!("failed checks: {}", failed.join(", ")),
        })
    };
    Ok((meta, err))
}
