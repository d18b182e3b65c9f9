//! Run configuration: a flat TOML file, `--set key=value` overrides on top,
//! and an echo block that is written into every output file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use dsd_core::qcore::{FrequencyConvention, UnitSystem};
use dsd_core::{CutAxis, DeltaRange, IntegratorConfig, Scheme, StepPolicy};

pub const ECHO_END: &str = "#! end config";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: String,
    pub tau_over_taum: Option<f64>,
    /// Peak coupling of the schedule in units of the reference Ω₀ (transfer only).
    pub amplitude: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub grid_n: usize,
    pub cut_n: usize,
    pub axis: String,
    /// Fixed RK4 step in 1/Ω₀; absent means automatic.
    pub step: Option<f64>,
    pub norm_tolerance: f64,
    pub window_multiplier: f64,
    pub trajectory_samples: usize,
    pub omega0_mhz: f64,
    pub omega0_convention: String,
    pub omega_m_ghz: f64,
    pub m_resonator_g: f64,
    pub gamma_e_mhz_per_gauss: f64,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub x_n: usize,
    pub offset: f64,
    pub calibrate: bool,
    pub threshold: f64,
    pub measured_p3: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: "dsd".into(),
            tau_over_taum: None,
            amplitude: 1.0,
            delta1: 0.0,
            delta2: 0.0,
            delta_min: -5.0,
            delta_max: 5.0,
            grid_n: 41,
            cut_n: 201,
            axis: "degenerate".into(),
            step: None,
            norm_tolerance: 1e-8,
            window_multiplier: 10.0,
            trajectory_samples: 512,
            omega0_mhz: 1.0,
            omega0_convention: "angular".into(),
            omega_m_ghz: 6.0,
            m_resonator_g: 1e-15,
            gamma_e_mhz_per_gauss: dsd_core::sensors::NV_GAMMA_E_MHZ_PER_GAUSS,
            x_min: None,
            x_max: None,
            x_n: 201,
            offset: 0.0,
            calibrate: true,
            threshold: dsd_core::sensors::DEFAULT_RESOLUTION_THRESHOLD,
            measured_p3: None,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Sensor flavour for `sensor` and `calibrate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SensorKind {
    Mass,
    Field,
}

/// Pulls the echoed config out of a previous output file: the lines between
/// the leading `#!` line and [`ECHO_END`], with the `# ` prefix removed.
fn extract_echo(text: &str) -> String {
    text.lines()
        .skip(1)
        .take_while(|l| *l != ECHO_END)
        .map(|l| l.strip_prefix("# ").or_else(|| l.strip_prefix('#')).unwrap_or(l))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Loads `path` (a config file or a previous output with an echo block) and
/// applies `overrides` in order.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
            let body = if text.starts_with("#!") {
                extract_echo(&text)
            } else {
                text
            };
            body.parse::<toml::Table>()
                .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for item in overrides {
        let Some((key, raw)) = item.split_once('=') else {
            return err(format!("override {item:?} is not of the form key=value"));
        };
        let key = key.trim();
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        table.insert(key.to_string(), value);
    }
    toml::Value::Table(table)
        .try_into::<RunConfig>()
        .map_err(|e| ConfigError(format!("invalid config: {e}")))
}

impl RunConfig {
    /// Fills command-dependent defaults and checks every value.
    pub fn resolve(mut self, sensor: Option<SensorKind>) -> Result<Self, ConfigError> {
        let tau_default = match sensor {
            Some(SensorKind::Field) => 10.0,
            _ => 1.0,
        };
        self.tau_over_taum.get_or_insert(tau_default);
        match sensor {
            Some(SensorKind::Mass) => {
                self.x_min.get_or_insert(0.0);
                self.x_max.get_or_insert(1e-19);
            }
            Some(SensorKind::Field) => {
                self.x_min.get_or_insert(-0.05);
                self.x_max.get_or_insert(0.05);
            }
            None => {}
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.scheme()?;
        self.cut_axis()?;
        self.convention()?;
        if !(self.tau() > 0.0) {
            return err("tau_over_taum must be positive");
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return err("amplitude must be finite and non-negative");
        }
        if !(self.delta_min < self.delta_max) {
            return err("delta_min must be below delta_max");
        }
        if self.grid_n < 2 || self.cut_n < 3 {
            return err("grid_n must be at least 2 and cut_n at least 3");
        }
        if self.trajectory_samples < 2 {
            return err("trajectory_samples must be at least 2");
        }
        if self.x_n < 3 {
            return err("x_n must be at least 3");
        }
        if let (Some(lo), Some(hi)) = (self.x_min, self.x_max) {
            if !(lo < hi) {
                return err("x_min must be below x_max");
            }
        }
        if !(self.threshold > 0.0) {
            return err("threshold must be positive");
        }
        if let Some(p) = self.measured_p3 {
            if !(0.0..=1.0).contains(&p) {
                return err("measured_p3 must lie in [0, 1]");
            }
        }
        if !(self.omega0_mhz > 0.0) || !(self.omega_m_ghz > 0.0) || !(self.m_resonator_g > 0.0) {
            return err("omega0_mhz, omega_m_ghz and m_resonator_g must be positive");
        }
        if !(self.gamma_e_mhz_per_gauss > 0.0) {
            return err("gamma_e_mhz_per_gauss must be positive");
        }
        self.integrator()
            .validate()
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn tau(&self) -> f64 {
        self.tau_over_taum.unwrap_or(1.0)
    }

    pub fn scheme(&self) -> Result<Scheme, ConfigError> {
        self.scheme.parse().map_err(|e: dsd_core::Error| ConfigError(e.to_string()))
    }

    pub fn cut_axis(&self) -> Result<CutAxis, ConfigError> {
        self.axis.parse().map_err(|e: dsd_core::Error| ConfigError(e.to_string()))
    }

    pub fn convention(&self) -> Result<FrequencyConvention, ConfigError> {
        match self.omega0_convention.as_str() {
            "angular" => Ok(FrequencyConvention::Angular),
            "cyclic" => Ok(FrequencyConvention::Cyclic),
            other => err(format!(
                "unknown omega0_convention {other:?} (expected \"angular\" or \"cyclic\")"
            )),
        }
    }

    pub fn units(&self) -> Result<UnitSystem, ConfigError> {
        UnitSystem::physical(self.omega0_mhz, self.convention()?)
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            step_policy: self.step.map_or(StepPolicy::Auto, StepPolicy::Fixed),
            norm_tolerance: self.norm_tolerance,
            window_multiplier: Some(self.window_multiplier),
        }
    }

    pub fn delta_range(&self, n: usize) -> DeltaRange {
        DeltaRange {
            lo: self.delta_min,
            hi: self.delta_max,
            n,
        }
    }

    /// `#`-prefixed config block; feeding the file back through `--config`
    /// reproduces the run.
    pub fn echo(&self, command: &str) -> String {
        let body = toml::to_string(self).expect("flat config serializes");
        let mut out = format!("#! dsd {} {command}\n", env!("CARGO_PKG_VERSION"));
        for line in body.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(ECHO_END);
        out.push('\n');
        out
    }
}
