//! Scenario and sweep configuration files.

use std::path::Path;

use morse_decoherence::analysis::FitOptions;
use morse_decoherence::dynamics::UNSTABLE_TRACE_ERROR;
use morse_decoherence::wigner::WignerWindow;
use morse_decoherence::Level;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// One trajectory. Times (`t_max`, frame and snapshot times) are multiples
/// of t0; `dt` is in the model's natural time unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub s: f64,
    pub coupling: Coupling,
    /// In units of ħω_01/k.
    pub temperature: f64,
    pub initial: Initial,
    #[serde(default)]
    pub level: Level,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_max: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoherence_fit: Option<FitOptions>,
}

fn default_stride() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Coupling {
    /// Zero-temperature `ω_01/γ_01`.
    Ratio(f64),
    Lambda(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Initial {
    Coherent {
        x0: f64,
        #[serde(default)]
        p0: f64,
    },
    Eigenstate(usize),
    Thermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    /// Abort once the smallest eigenvalue drops below `−positivity`.
    pub positivity: f64,
    pub unstable_trace: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            positivity: 1e-6,
            unstable_trace: UNSTABLE_TRACE_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub csv: bool,
    /// Times at which full density matrices are written.
    pub snapshots: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wigner: Option<WignerOutput>,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            csv: true,
            snapshots: Vec::new(),
            wigner: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerOutput {
    #[serde(default)]
    pub window: WignerWindow,
    pub frame_times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    X0,
    Temperature,
    Lambda,
    Ratio,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            Self::X0 => "x0",
            Self::Temperature => "temperature",
            Self::Lambda => "lambda",
            Self::Ratio => "ratio",
        }
    }
}

/// A base scenario and one parameter to vary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub scenario: ScenarioConfig,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    #[serde(default)]
    pub fit: FitOptions,
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::schema(format!("{origin}: at `{path}`: {}", e.into_inner()))
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn field_error(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::schema(format!("at `{path}`: {msg}"))
}

fn check_times(path: &str, times: &[f64], t_max: f64) -> Result<(), CliError> {
    for (k, &t) in times.iter().enumerate() {
        if !(t >= 0.0 && t <= t_max) {
            return Err(field_error(
                &format!("{path}[{k}]"),
                format!("time {t} outside [0, t_max = {t_max}]"),
            ));
        }
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let cfg: Self = parse(&read(path)?, &path.display().to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = parse(text, "config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Schema-level checks; physical preconditions are left to the model.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(field_error("s", format!("must be positive, got {}", self.s)));
        }
        match self.coupling {
            Coupling::Ratio(r) if !(r.is_finite() && r > 0.0) => {
                return Err(field_error("coupling.ratio", format!("must be positive, got {r}")))
            }
            Coupling::Lambda(l) if !(l.is_finite() && l >= 0.0) => {
                return Err(field_error("coupling.lambda", format!("must be >= 0, got {l}")))
            }
            _ => {}
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(field_error(
                "temperature",
                format!("must be >= 0, got {}", self.temperature),
            ));
        }
        if let Initial::Coherent { x0, p0 } = self.initial {
            if !(x0.is_finite() && p0.is_finite()) {
                return Err(field_error("initial.coherent", "x0 and p0 must be finite"));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(field_error("dt", format!("must be positive, got {dt}")));
            }
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(field_error("t_max", format!("must be positive, got {}", self.t_max)));
        }
        if self.sample_stride == 0 {
            return Err(field_error("sample_stride", "must be at least 1"));
        }
        if !(self.monitor.positivity >= 0.0 && self.monitor.unstable_trace > 0.0) {
            return Err(field_error("monitor", "tolerances must be positive"));
        }
        check_times("outputs.snapshots", &self.outputs.snapshots, self.t_max)?;
        if let Some(w) = &self.outputs.wigner {
            w.window
                .validate()
                .map_err(|e| field_error("outputs.wigner.window", e))?;
            check_times("outputs.wigner.frame_times", &w.frame_times, self.t_max)?;
        }
        if let Some(fit) = &self.decoherence_fit {
            check_fit("decoherence_fit", fit)?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

fn check_fit(path: &str, fit: &FitOptions) -> Result<(), CliError> {
    if !(fit.slope_ratio > 1.0) {
        return Err(field_error(&format!("{path}.slope_ratio"), "must exceed 1"));
    }
    if fit.smoothing_window == 0 {
        return Err(field_error(&format!("{path}.smoothing_window"), "must be at least 1"));
    }
    if !(fit.agreement > 0.0) {
        return Err(field_error(&format!("{path}.agreement"), "must be positive"));
    }
    Ok(())
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let cfg: Self = parse(&read(path)?, &path.display().to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(field_error("values", "grid is empty"));
        }
        if self.parameter == SweepParameter::X0 && !matches!(self.scenario.initial, Initial::Coherent { .. }) {
            return Err(field_error("parameter", "x0 sweeps need a coherent initial state"));
        }
        check_fit("fit", &self.fit)?;
        for (k, &v) in self.values.iter().enumerate() {
            self.point(v)
                .validate()
                .map_err(|e| CliError::schema(format!("values[{k}] = {v}: {}", e.message)))?;
        }
        Ok(())
    }

    /// The base scenario with the swept parameter set to `value`.
    pub fn point(&self, value: f64) -> ScenarioConfig {
        let mut cfg = self.scenario.clone();
        match self.parameter {
            SweepParameter::X0 => {
                if let Initial::Coherent { p0, .. } = cfg.initial {
                    cfg.initial = Initial::Coherent { x0: value, p0 };
                }
            }
            SweepParameter::Temperature => cfg.temperature = value,
            SweepParameter::Lambda => cfg.coupling = Coupling::Lambda(value),
            SweepParameter::Ratio => cfg.coupling = Coupling::Ratio(value),
        }
        cfg
    }

    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
