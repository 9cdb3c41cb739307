//! Flat key-value run configuration, named presets and validation.

use std::path::Path;

use bindsym::experiments::Method;
use bindsym::models::{NlsHamiltonian, SchwarzschildPreset};
use bindsym::{GammaVariant, IntegratorConfig, ModelKind, Projection};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Every key is optional; absent keys take the preset value, then the
/// default. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    /// NLS truncation size when `q0`/`p0` are not given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    /// Schwarzschild initial data when `q0`/`p0` are not given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit_preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<String>,
    /// `standard` or `printed` triple-jump exponent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_variant: Option<String>,
    /// Linear friction coefficient of the force term.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    /// Observer stride in steps. Overrides `sample_interval`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omegas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shell: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossings: Option<usize>,
    /// Initial conditions per axis of the section grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
    /// Method the proposed integrator is compared against.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        Config { $($f: $top.$f.clone().or_else(|| $base.$f.clone()),)* }
    };
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.message().to_string()).with_toml_span(text, e.span()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| e.context(&path.display().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    /// Keys set in `self` win over keys set in `base`.
    pub fn over(&self, base: &Config) -> Config {
        let top = self;
        overlay!(base, top; system, modes, orbit_preset, q0, p0, delta, omega, order, t_end, n_steps,
            projection, gamma_variant, damping, stride, sample_interval, escape_bound, output, deltas,
            omegas, shell, crossings, grid, max_time, baseline, checks, seed)
    }

    /// Fills in every default and validates the result, so the returned
    /// config describes the run completely.
    pub fn resolve(&self) -> Result<Config, CliError> {
        let mut c = self.over(&defaults(self.system_kind()?));
        if c.t_end.is_some() && c.n_steps.is_some() {
            return Err(CliError::config("t_end, n_steps: set at most one"));
        }
        if c.t_end.is_none() && c.n_steps.is_none() {
            c.t_end = Some(10.0);
        }
        if c.q0.is_none() != c.p0.is_none() {
            return Err(CliError::config("q0, p0: give both or neither"));
        }
        if c.q0.is_none() {
            let (q0, p0) = match c.system_kind()? {
                ModelKind::Product1d => (vec![-3.0], vec![0.0]),
                ModelKind::Schwarzschild => c.orbit_preset_kind()?.initial_condition(),
                ModelKind::Nls => {
                    let n = c.modes.unwrap_or(2);
                    NlsHamiltonian::new(n).map_err(|e| CliError::config(format!("modes: {e}")))?.cascade_initial_condition()
                }
            };
            c.q0 = Some(q0);
            c.p0 = Some(p0);
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), CliError> {
        let model = self.model()?;
        let (q0, p0) = (self.q0.as_ref().unwrap(), self.p0.as_ref().unwrap());
        if q0.len() != model.dim() || p0.len() != model.dim() {
            return Err(CliError::config(format!(
                "q0, p0: system {} needs {} components each, got {} and {}",
                model.name(),
                model.dim(),
                q0.len(),
                p0.len()
            )));
        }
        if let (Some(n), ModelKind::Nls) = (self.modes, self.system_kind()?) {
            if n != q0.len() {
                return Err(CliError::config(format!("modes: {n} disagrees with q0 of length {}", q0.len())));
            }
        }
        if q0.iter().chain(p0).any(|v| !v.is_finite()) {
            return Err(CliError::config("q0, p0: values must be finite"));
        }
        self.integrator()?;
        self.gamma_kind()?;
        if let Some(t) = self.t_end {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(CliError::config(format!("t_end: must be finite and >= 0, got {t}")));
            }
        }
        self.projection_kind()?;
        self.baseline_kind()?;
        if let Some(s) = self.sample_interval {
            if !(s > 0.0) {
                return Err(CliError::config(format!("sample_interval: must be > 0, got {s}")));
            }
        }
        if let Some(b) = self.escape_bound {
            if !(b > 0.0) {
                return Err(CliError::config(format!("escape_bound: must be > 0, got {b}")));
            }
        }
        if let Some(g) = self.damping {
            bindsym::LinearDamping::new(g).map_err(|e| CliError::config(format!("damping: {e}")))?;
        }
        for (key, list) in [("deltas", &self.deltas), ("omegas", &self.omegas)] {
            if let Some(v) = list {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(CliError::config(format!("{key}: values must be finite")));
                }
            }
        }
        if let Some(ids) = &self.checks {
            let known: Vec<usize> = bindsym::checks::CHECKS.iter().map(|c| c.0).collect();
            if let Some(bad) = ids.iter().find(|i| !known.contains(i)) {
                return Err(CliError::config(format!("checks: no check with id {bad}")));
            }
        }
        Ok(())
    }

    pub fn system_kind(&self) -> Result<ModelKind, CliError> {
        self.system
            .as_deref()
            .unwrap_or("product1d")
            .parse()
            .map_err(|e| CliError::config(format!("system: {e}")))
    }

    pub fn model(&self) -> Result<Box<dyn bindsym::Hamiltonian>, CliError> {
        let modes = self.q0.as_ref().map_or(self.modes.unwrap_or(2), Vec::len);
        self.system_kind()?
            .build(modes)
            .map_err(|e| CliError::config(format!("system: {e}")))
    }

    pub fn orbit_preset_kind(&self) -> Result<SchwarzschildPreset, CliError> {
        self.orbit_preset
            .as_deref()
            .map_or(Ok(SchwarzschildPreset::default()), str::parse)
            .map_err(|e| CliError::config(format!("orbit_preset: {e}")))
    }

    pub fn projection_kind(&self) -> Result<Projection, CliError> {
        self.projection
            .as_deref()
            .map_or(Ok(Projection::default()), str::parse)
            .map_err(|e| CliError::config(format!("projection: {e}")))
    }

    pub fn baseline_kind(&self) -> Result<Method, CliError> {
        self.baseline
            .as_deref()
            .map_or(Ok(Method::Rk4), str::parse)
            .map_err(|e| CliError::config(format!("baseline: {e}")))
    }

    pub fn gamma_kind(&self) -> Result<GammaVariant, CliError> {
        match self.gamma_variant.as_deref().unwrap_or("standard") {
            "standard" => Ok(GammaVariant::Standard),
            "printed" => Ok(GammaVariant::Printed),
            other => Err(CliError::config(format!(
                "gamma_variant: unknown value '{other}' (expected standard or printed)"
            ))),
        }
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        let delta = self.delta.unwrap_or(0.01);
        let omega = self.omega.unwrap_or(20.0);
        let order = self.order.unwrap_or(4);
        let cfg = match (self.n_steps, self.t_end) {
            (Some(n), _) => IntegratorConfig::new(delta, omega, order, n),
            (None, t) => IntegratorConfig::for_duration(delta, omega, order, t.unwrap_or(10.0)),
        };
        cfg.map(|c| c.with_gamma(self.gamma_kind().unwrap_or(GammaVariant::Standard)))
            .map_err(|e| CliError::config(format!("delta, omega, order, t_end, n_steps: {e}")))
    }

    /// Observer stride in steps.
    pub fn stride_steps(&self) -> usize {
        match (self.stride, self.sample_interval) {
            (Some(s), _) => s.max(1),
            (None, Some(dt)) => ((dt / self.delta.unwrap_or(0.01)).round() as usize).max(1),
            (None, None) => 1,
        }
    }
}

/// Defaults per system. Presets and config files override them.
fn defaults(kind: ModelKind) -> Config {
    let mut c = Config {
        system: Some(kind.name().into()),
        delta: Some(0.01),
        omega: Some(20.0),
        order: Some(4),
        projection: Some("copy1".into()),
        gamma_variant: Some("standard".into()),
        damping: Some(0.0),
        escape_bound: Some(bindsym::DEFAULT_ESCAPE_BOUND),
        baseline: Some("rk4".into()),
        seed: Some(bindsym::checks::DEFAULT_SEED),
        ..Config::default()
    };
    if kind == ModelKind::Schwarzschild {
        c.delta = Some(0.2);
        c.omega = Some(2.0);
        c.orbit_preset = Some("constraint".into());
    }
    c
}

pub const PRESETS: [&str; 13] = [
    "omega-scan",
    "delta-scan",
    "energy",
    "order-2",
    "nls-two-mode",
    "nls-two-mode-long",
    "nls-cascade",
    "section-free",
    "section-weak",
    "section-strong",
    "orbit",
    "orbit-long",
    "orbit-damped",
];

pub fn preset(name: &str) -> Result<Config, CliError> {
    let product = |delta: f64, omega: f64, t_end: f64| Config {
        system: Some("product1d".into()),
        q0: Some(vec![-3.0]),
        p0: Some(vec![0.0]),
        delta: Some(delta),
        omega: Some(omega),
        order: Some(4),
        t_end: Some(t_end),
        ..Config::default()
    };
    let section = |omega: f64| Config {
        shell: Some(10.0),
        crossings: Some(500),
        grid: Some(6),
        ..product(0.005, omega, 0.0)
    };
    let two_mode = |t_end: f64| Config {
        system: Some("nls".into()),
        q0: Some(vec![3.0, 0.01]),
        p0: Some(vec![1.0, 0.0]),
        delta: Some(0.01),
        omega: Some(100.0),
        order: Some(4),
        t_end: Some(t_end),
        sample_interval: Some(0.1),
        ..Config::default()
    };
    let orbit = |t_end: f64| Config {
        system: Some("schwarzschild".into()),
        orbit_preset: Some("constraint".into()),
        delta: Some(0.2),
        omega: Some(2.0),
        order: Some(4),
        t_end: Some(t_end),
        sample_interval: Some(10.0),
        ..Config::default()
    };
    Ok(match name {
        "omega-scan" => Config {
            omegas: Some(vec![20.0, 40.0, 80.0, 160.0]),
            ..product(1e-3, 20.0, 100.0)
        },
        "delta-scan" => Config {
            deltas: Some([-1.0, -1.5, -2.0, -2.5, -3.0].iter().map(|e| 10f64.powf(*e)).collect()),
            ..product(1e-3, 20.0, 100.0)
        },
        "energy" => Config {
            stride: Some(10),
            ..product(0.1, 20.0, 1000.0)
        },
        "order-2" => Config {
            order: Some(2),
            deltas: Some(vec![0.02, 0.01, 0.005, 0.0025]),
            ..product(0.01, 20.0, 10.0)
        },
        "nls-two-mode" => two_mode(1e4),
        "nls-two-mode-long" => two_mode(1e5),
        "nls-cascade" => Config {
            system: Some("nls".into()),
            modes: Some(5),
            delta: Some(1e-3),
            omega: Some(100.0),
            order: Some(4),
            t_end: Some(1.0),
            sample_interval: Some(0.01),
            ..Config::default()
        },
        "section-free" => section(0.0),
        "section-weak" => section(0.8),
        "section-strong" => section(10.0),
        "orbit" => orbit(1e3),
        "orbit-long" => orbit(5e4),
        "orbit-damped" => Config {
            damping: Some(1e-4),
            ..orbit(1e3)
        },
        other => {
            return Err(CliError::config(format!(
                "--preset: unknown preset '{other}' (one of {})",
                PRESETS.join(", ")
            )))
        }
    })
}
