//! Poincaré sections of the extended one-degree-of-freedom system on the
//! surface `x = value` at fixed extended energy, and a scatter statistic that
//! separates closed invariant curves from area-filling chaotic clouds.

use crate::error::{Error, Result};
use crate::integrator::{extended_energy, extended_vector_field, Integrator, IntegratorConfig};
use crate::models::Hamiltonian;
use crate::par::{self, Execution};
use crate::state::ExtendedState;

/// Surface of section `x = value`, crossed with `ẋ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Surface {
    pub value: f64,
}

impl Default for Surface {
    fn default() -> Self {
        Self { value: 0.0 }
    }
}

/// Uniform grid of cell centres in the `(q, p)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcGrid {
    pub q_range: (f64, f64),
    pub p_range: (f64, f64),
    pub nq: usize,
    pub np: usize,
}

impl IcGrid {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.nq * self.np);
        let dq = (self.q_range.1 - self.q_range.0) / self.nq as f64;
        let dp = (self.p_range.1 - self.p_range.0) / self.np as f64;
        for i in 0..self.nq {
            for j in 0..self.np {
                out.push((
                    self.q_range.0 + (i as f64 + 0.5) * dq,
                    self.p_range.0 + (j as f64 + 0.5) * dp,
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareConfig {
    pub omega: f64,
    pub shell: f64,
    pub surface: Surface,
    pub grid: IcGrid,
    pub delta: f64,
    pub order: usize,
    /// Crossings collected per trajectory before it is stopped.
    pub crossings: usize,
    /// Hard cap on the integration time of one trajectory.
    pub max_time: f64,
    /// `|x − value|` accepted at a refined crossing.
    pub crossing_tol: f64,
    /// `|H̄ − shell|` accepted at a refined crossing.
    pub shell_tol: f64,
    /// Interval scanned for the momentum `y` completing an initial condition.
    pub y_range: (f64, f64),
    pub y_samples: usize,
}

impl PoincareConfig {
    /// Settings for the product system on the shell `H̄ = 10`.
    pub fn product_shell(omega: f64) -> Self {
        Self {
            omega,
            shell: 10.0,
            surface: Surface::default(),
            grid: IcGrid {
                q_range: (-1.0, 1.0),
                p_range: (-1.0, 1.0),
                nq: 6,
                np: 6,
            },
            delta: 0.005,
            order: 4,
            crossings: 500,
            max_time: 20_000.0,
            crossing_tol: 1e-10,
            shell_tol: 1e-4,
            y_range: (-10.0, 10.0),
            y_samples: 4001,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.grid.nq == 0 || self.grid.np == 0 {
            return Err(Error::invalid("initial-condition grid is empty"));
        }
        if self.y_samples < 2 || !(self.y_range.1 > self.y_range.0) {
            return Err(Error::invalid("y search interval is empty"));
        }
        if self.crossings == 0 {
            return Err(Error::invalid("crossings per trajectory must be >= 1"));
        }
        IntegratorConfig::new(self.delta, self.omega, self.order, 0).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub q: f64,
    pub p: f64,
    pub y: f64,
    pub time: f64,
    pub trajectory: usize,
    pub crossing: usize,
}

/// Initial condition on the surface and its provenance in the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionStart {
    pub grid_index: usize,
    pub root: usize,
    pub state: ExtendedState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPoint {
    pub q: f64,
    pub p: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySection {
    pub points: Vec<SectionPoint>,
    /// Crossings whose refinement failed or fell off the shell.
    pub dropped: usize,
    pub escaped: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareSection {
    pub surface: Surface,
    pub shell: f64,
    pub omega: f64,
    pub starts: Vec<SectionStart>,
    pub trajectories: Vec<TrajectorySection>,
    pub skipped: Vec<SkippedPoint>,
}

impl PoincareSection {
    pub fn points(&self) -> impl Iterator<Item = &SectionPoint> {
        self.trajectories.iter().flat_map(|t| t.points.iter())
    }

    pub fn total_points(&self) -> usize {
        self.trajectories.iter().map(|t| t.points.len()).sum()
    }

    pub fn dropped(&self) -> usize {
        self.trajectories.iter().map(|t| t.dropped).sum()
    }
}

/// Roots `y` of `H̄(q, p, x, y) = shell` in `range`, by sign-change scan and
/// bisection. Tangential roots are not detected.
pub fn solve_surface_momentum(
    model: &dyn Hamiltonian,
    omega: f64,
    q: f64,
    p: f64,
    x: f64,
    shell: f64,
    range: (f64, f64),
    samples: usize,
) -> Result<Vec<f64>> {
    let g = |y: f64| -> Result<f64> {
        let s = ExtendedState::new(vec![q], vec![p], vec![x], vec![y])?;
        Ok(extended_energy(model, omega, &s)? - shell)
    };
    let h = (range.1 - range.0) / (samples - 1) as f64;
    let mut roots = Vec::new();
    let mut y0 = range.0;
    let mut g0 = g(y0)?;
    for k in 1..samples {
        let y1 = range.0 + k as f64 * h;
        let g1 = g(y1)?;
        if g0 == 0.0 {
            roots.push(y0);
        } else if g0.signum() != g1.signum() && g1 != 0.0 {
            let (mut lo, mut hi, mut glo) = (y0, y1, g0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let gm = g(mid)?;
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if gm.signum() == glo.signum() {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        y0 = y1;
        g0 = g1;
    }
    if g0 == 0.0 {
        roots.push(y0);
    }
    Ok(roots)
}

fn hermite(a: f64, b: f64, da: f64, db: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * a
        + (s3 - 2.0 * s2 + s) * h * da
        + (-2.0 * s3 + 3.0 * s2) * b
        + (s3 - s2) * h * db
}

fn interpolate(a: &[f64], b: &[f64], fa: &[f64], fb: &[f64], h: f64, s: f64) -> Vec<f64> {
    (0..a.len()).map(|i| hermite(a[i], b[i], fa[i], fb[i], h, s)).collect()
}

/// Locates `x(s) = value` on the cubic Hermite interpolant between two
/// consecutive steps by a safeguarded secant (Illinois) iteration.
fn refine_crossing(
    prev: &[f64],
    next: &[f64],
    f_prev: &[f64],
    f_next: &[f64],
    h: f64,
    x_index: usize,
    value: f64,
    tol: f64,
) -> Option<(f64, Vec<f64>)> {
    let g = |s: f64| hermite(prev[x_index], next[x_index], f_prev[x_index], f_next[x_index], h, s) - value;
    let (mut a, mut b) = (0.0, 1.0);
    let (mut ga, mut gb) = (g(a), g(b));
    if ga.abs() <= tol {
        return Some((a, interpolate(prev, next, f_prev, f_next, h, a)));
    }
    if gb.abs() <= tol {
        return Some((b, interpolate(prev, next, f_prev, f_next, h, b)));
    }
    if ga.signum() == gb.signum() {
        return None;
    }
    let mut side = 0;
    for _ in 0..100 {
        let s = (a * gb - b * ga) / (gb - ga);
        let gs = g(s);
        if gs.abs() <= tol {
            return Some((s, interpolate(prev, next, f_prev, f_next, h, s)));
        }
        if gs.signum() == ga.signum() {
            a = s;
            ga = gs;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = s;
            gb = gs;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
    }
    None
}

/// Integrates one initial condition and collects its upward crossings of
/// the surface. A start point lying on the surface with `ẋ ≥ 0` counts as the
/// first crossing.
pub fn section_of_trajectory(
    model: &dyn Hamiltonian,
    cfg: &PoincareConfig,
    start: &ExtendedState,
    trajectory: usize,
) -> Result<TrajectorySection> {
    if model.dim() != 1 || start.dim() != 1 {
        return Err(Error::invalid("Poincaré sections are implemented for one degree of freedom"));
    }
    let n_steps = (cfg.max_time / cfg.delta).ceil() as usize;
    let icfg = IntegratorConfig::new(cfg.delta, cfg.omega, cfg.order, n_steps)?;
    let integ = Integrator::new(model, icfg)?;
    // flat layout [q, p, x, y]
    let (qi, pi, xi, yi) = (0, 1, 2, 3);
    let value = cfg.surface.value;

    let mut points = Vec::new();
    let mut dropped = 0usize;
    let accept = |state: &[f64], time: f64, points: &mut Vec<SectionPoint>| -> Result<bool> {
        let s = ExtendedState::from_slice(state)?;
        let e = extended_energy(model, cfg.omega, &s)?;
        if (state[xi] - value).abs() <= cfg.crossing_tol && (e - cfg.shell).abs() <= cfg.shell_tol {
            let crossing = points.len();
            points.push(SectionPoint {
                q: state[qi],
                p: state[pi],
                y: state[yi],
                time,
                trajectory,
                crossing,
            });
            Ok(true)
        } else {
            Ok(false)
        }
    };

    let f0 = extended_vector_field(model, cfg.omega, start)?;
    let flat0 = start.to_vec();
    if (flat0[xi] - value).abs() <= cfg.crossing_tol && f0[xi] >= 0.0 && !accept(&flat0, 0.0, &mut points)? {
        dropped += 1;
    }

    let mut state = start.clone();
    let mut prev = flat0;
    let mut f_prev = f0;
    let mut failure: Option<Error> = None;
    let run = integ.run_from(&mut state, |n, t, s| {
        if n == 0 {
            return true;
        }
        let next = s.to_vec();
        if prev[xi] < value && next[xi] >= value {
            let f_next = match extended_vector_field(model, cfg.omega, s) {
                Ok(f) => f,
                Err(e) => {
                    failure = Some(e);
                    return false;
                }
            };
            match refine_crossing(&prev, &next, &f_prev, &f_next, cfg.delta, xi, value, cfg.crossing_tol) {
                Some((frac, point)) => match accept(&point, t - cfg.delta + frac * cfg.delta, &mut points) {
                    Ok(true) => {}
                    Ok(false) => dropped += 1,
                    Err(e) => {
                        failure = Some(e);
                        return false;
                    }
                },
                None => dropped += 1,
            }
            f_prev = f_next;
        } else {
            f_prev = match extended_vector_field(model, cfg.omega, s) {
                Ok(f) => f,
                Err(e) => {
                    failure = Some(e);
                    return false;
                }
            };
        }
        prev = next;
        points.len() < cfg.crossings
    });
    let escaped = match (run, failure) {
        (Err(e), _) | (Ok(_), Some(e)) => Some(e.to_string()),
        _ => None,
    };
    Ok(TrajectorySection {
        points,
        dropped,
        escaped,
    })
}

/// Completes every grid point with both admissible `y` roots and integrates
/// the resulting initial conditions.
pub fn poincare_section(model: &dyn Hamiltonian, cfg: &PoincareConfig, exec: Execution) -> Result<PoincareSection> {
    cfg.validate()?;
    if model.dim() != 1 {
        return Err(Error::invalid("Poincaré sections are implemented for one degree of freedom"));
    }
    let mut starts = Vec::new();
    let mut skipped = Vec::new();
    for (grid_index, (q, p)) in cfg.grid.points().into_iter().enumerate() {
        let roots = solve_surface_momentum(
            model,
            cfg.omega,
            q,
            p,
            cfg.surface.value,
            cfg.shell,
            cfg.y_range,
            cfg.y_samples,
        );
        match roots {
            Ok(r) if r.is_empty() => skipped.push(SkippedPoint {
                q,
                p,
                reason: "no real y root on shell".into(),
            }),
            Ok(r) => {
                for (root, y) in r.into_iter().enumerate() {
                    starts.push(SectionStart {
                        grid_index,
                        root,
                        state: ExtendedState::new(vec![q], vec![p], vec![cfg.surface.value], vec![y])?,
                    });
                }
            }
            Err(e) => skipped.push(SkippedPoint {
                q,
                p,
                reason: e.to_string(),
            }),
        }
    }
    if starts.is_empty() {
        return Err(Error::NoAdmissibleInitialConditions { shell: cfg.shell });
    }
    let trajectories = par::map(&starts, exec, |i, s| section_of_trajectory(model, cfg, &s.state, i))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(PoincareSection {
        surface: cfg.surface,
        shell: cfg.shell,
        omega: cfg.omega,
        starts,
        trajectories,
        skipped,
    })
}

/// Minimum number of section points for a trajectory to be scored.
pub const MIN_SCORED_POINTS: usize = 64;

fn nearest_neighbour_distances(points: &[(f64, f64)]) -> Vec<f64> {
    points
        .iter()
        .enumerate()
        .map(|(i, a)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| (a.0 - b.0).hypot(a.1 - b.1))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Smallest prefix used in the scaling fit.
const MIN_PREFIX: usize = 16;

/// Scatter dimension of a point cloud in the section plane.
///
/// The mean nearest-neighbour distance of `n` points spread along a curve
/// shrinks like `1/n`, over an area like `1/√n`. The exponent is fitted on
/// log–log axes over the prefixes `n, n/2, n/4, …` and inverted, giving ≈ 1
/// for invariant curves and ≈ 2 for chaotic clouds. Point sets that collapse
/// onto a few locations (periodic orbits) score 0.
pub fn scatter_dimension(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < MIN_SCORED_POINTS {
        return None;
    }
    let mut full = nearest_neighbour_distances(points);
    full.sort_by(|a, b| a.total_cmp(b));
    let scale = points.iter().fold(0.0_f64, |m, p| m.max(p.0.abs()).max(p.1.abs())).max(1.0);
    if !(full[full.len() / 2] > 1e-9 * scale) {
        return Some(0.0);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut n = points.len();
    while n >= MIN_PREFIX {
        let d = nearest_neighbour_distances(&points[..n]);
        let mean = d.iter().sum::<f64>() / n as f64;
        xs.push((n as f64).ln());
        ys.push(mean.ln());
        n /= 2;
    }
    let slope = crate::analysis::linear_fit(&xs, &ys).ok()?.slope;
    if !(slope < 0.0) {
        return Some(0.0);
    }
    Some((-1.0 / slope).min(3.0))
}

/// Section-level chaos statistic: median scatter dimension over the scored
/// trajectories. The median ignores the few periodic orbits (score 0) and
/// resonant island chains that a grid inevitably hits.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosStatistic {
    pub median_dimension: f64,
    pub per_trajectory: Vec<Option<f64>>,
    pub scored: usize,
}

/// Statistic at or above which a section is called chaotic.
pub const CHAOTIC_THRESHOLD: f64 = 1.6;
/// Statistic at or below which a section is called regular.
pub const REGULAR_THRESHOLD: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionClass {
    Regular,
    Mixed,
    Chaotic,
}

impl SectionClass {
    pub fn name(self) -> &'static str {
        match self {
            SectionClass::Regular => "regular",
            SectionClass::Mixed => "mixed",
            SectionClass::Chaotic => "chaotic",
        }
    }
}

impl ChaosStatistic {
    pub fn classify(&self) -> SectionClass {
        if self.median_dimension >= CHAOTIC_THRESHOLD {
            SectionClass::Chaotic
        } else if self.median_dimension <= REGULAR_THRESHOLD {
            SectionClass::Regular
        } else {
            SectionClass::Mixed
        }
    }
}

pub fn chaos_statistic(section: &PoincareSection, exec: Execution) -> ChaosStatistic {
    let per_trajectory = par::map(&section.trajectories, exec, |_, t| {
        let pts: Vec<(f64, f64)> = t.points.iter().map(|p| (p.q, p.p)).collect();
        scatter_dimension(&pts)
    });
    let mut scored: Vec<f64> = per_trajectory.iter().flatten().copied().collect();
    scored.sort_by(|a, b| a.total_cmp(b));
    let median_dimension = match scored.len() {
        0 => 0.0,
        n if n % 2 == 1 => scored[n / 2],
        n => 0.5 * (scored[n / 2 - 1] + scored[n / 2]),
    };
    ChaosStatistic {
        median_dimension,
        scored: scored.len(),
        per_trajectory,
    }
}
