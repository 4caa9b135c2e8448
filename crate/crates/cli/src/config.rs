//! Scenario files: TOML with an inline `[device]` table or a `device_file`
//! reference, solver settings, run parameters and tolerances.

use std::ops::Range;
use std::path::{Path, PathBuf};

use perovsim_core::device::{build_device, Device, DeviceConfig, DeviceError};
use perovsim_core::diagnostics::Tolerances;
use perovsim_core::solver::{SolverConfig, SolverError};
use serde::{Deserialize, Serialize};

/// Environment variable overriding the root of all output directories.
pub const OUTPUT_ROOT_VAR: &str = "PEROVSIM_OUTPUT_ROOT";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("device: {0}")]
    Device(#[from] DeviceError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    EquilibriumDecay,
    Transient,
    StationarySweep,
    UniquenessProbe,
    ConvergenceStudy,
    AxiomCheck,
    RegularityProbe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioParams {
    /// Final time of transients.
    pub t_end: f64,
    /// Fixed step sizes for the decay runs; an empty list runs one adaptive transient.
    pub dt_sweep: Vec<f64>,
    /// Biases of a stationary sweep, visited in order.
    pub biases: Vec<f64>,
    /// Number of perturbed solver paths in the uniqueness probe.
    pub perturbations: usize,
    /// Horizon of the uniqueness probe; `t_end` if absent.
    pub probe_t_end: Option<f64>,
    /// Largest admissible pairwise discrepancy of the uniqueness probe.
    pub probe_tolerance: f64,
    /// Refinement levels of convergence studies.
    pub levels: usize,
    /// Coarsest mesh of the Poisson manufactured study.
    pub study_cells: usize,
    /// Coarsest step of the temporal study.
    pub study_dt: f64,
    /// Horizon of the temporal study.
    pub study_t_end: f64,
    /// Mesh refinements of the regularity probe.
    pub refinements: usize,
    /// Exponents q of the gradient norms.
    pub gradient_q: Vec<f64>,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt_sweep: Vec::new(),
            biases: vec![0.0],
            perturbations: 3,
            probe_t_end: None,
            probe_tolerance: 1e-8,
            levels: 4,
            study_cells: 16,
            study_dt: 0.04,
            study_t_end: 0.2,
            refinements: 3,
            gradient_q: vec![2.25, 2.5, 3.0],
        }
    }
}

/// Optional scaling factors echoed next to scaled values in the resolved config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    /// Thermal voltage U_T in volts.
    pub thermal_voltage: f64,
    /// Length scale in metres.
    #[serde(default = "one")]
    pub length: f64,
    /// Time scale in seconds.
    #[serde(default = "one")]
    pub time: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    kind: ScenarioKind,
    #[serde(default)]
    seed: u64,
    device: Option<DeviceConfig>,
    device_file: Option<PathBuf>,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    params: ScenarioParams,
    #[serde(default)]
    tolerances: Tolerances,
    units: Option<Units>,
    output: Option<PathBuf>,
}

/// A validated scenario with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub device: DeviceConfig,
    pub solver: SolverConfig,
    pub params: ScenarioParams,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub units: Option<Units>,
    pub output: PathBuf,
}

impl ScenarioSpec {
    pub fn build_device(&self) -> Result<Device, ConfigError> {
        Ok(build_device(&self.device)?)
    }

    pub fn probe_t_end(&self) -> f64 {
        self.params.probe_t_end.unwrap_or(self.params.t_end)
    }
}

fn line_column(text: &str, span: Option<Range<usize>>) -> (usize, usize) {
    let offset = span.map_or(0, |s| s.start).min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |p| offset - p - 1) + 1;
    (line, column)
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = line_column(text, e.span());
        ConfigError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads and validates a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioSpec, ConfigError> {
    let text = read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let fallback = path.file_stem().map_or_else(
        || "scenario".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    parse_scenario(&text, path, base, &fallback)
}

/// Parses scenario text; `device_file` is resolved relative to `base`.
pub fn parse_scenario(
    text: &str,
    path: &Path,
    base: &Path,
    fallback_name: &str,
) -> Result<ScenarioSpec, ConfigError> {
    let file: ScenarioFile = parse_toml(text, path)?;
    let device = match (file.device, file.device_file) {
        (Some(d), None) => d,
        (None, Some(f)) => {
            let p = base.join(f);
            parse_toml(&read(&p)?, &p)?
        }
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid {
                key: "device".into(),
                reason: "give either [device] or device_file, not both".into(),
            })
        }
        (None, None) => {
            return Err(ConfigError::Invalid {
                key: "device".into(),
                reason: "missing [device] table or device_file".into(),
            })
        }
    };
    let name = file.name.unwrap_or_else(|| fallback_name.to_string());
    let output = match file.output {
        Some(o) => o,
        None => std::env::var_os(OUTPUT_ROOT_VAR)
            .map_or_else(|| PathBuf::from("perovsim-out"), PathBuf::from)
            .join(&name),
    };
    let spec = ScenarioSpec {
        name,
        kind: file.kind,
        seed: file.seed,
        device,
        solver: file.solver,
        params: file.params,
        tolerances: file.tolerances,
        units: file.units,
        output,
    };
    validate(&spec)?;
    Ok(spec)
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

fn validate(spec: &ScenarioSpec) -> Result<(), ConfigError> {
    build_device(&spec.device)?;
    spec.solver.validate()?;
    let p = &spec.params;
    if !(p.t_end > 0.0 && p.t_end.is_finite()) {
        return Err(invalid("params.t_end", "must be positive"));
    }
    if p.dt_sweep.iter().any(|dt| !(*dt > 0.0 && *dt <= p.t_end)) {
        return Err(invalid("params.dt_sweep", "steps must lie in (0, t_end]"));
    }
    if let Some(t) = p.probe_t_end {
        if !(t > 0.0) {
            return Err(invalid("params.probe_t_end", "must be positive"));
        }
    }
    if p.levels < 3 {
        return Err(invalid(
            "params.levels",
            "convergence studies need at least 3 levels",
        ));
    }
    if p.study_cells < 4 {
        return Err(invalid("params.study_cells", "need at least 4 cells"));
    }
    if !(p.study_dt > 0.0 && p.study_dt <= p.study_t_end) {
        return Err(invalid("params.study_dt", "must lie in (0, study_t_end]"));
    }
    if p.gradient_q.iter().any(|q| !(*q >= 1.0)) {
        return Err(invalid("params.gradient_q", "exponents must be at least 1"));
    }
    if p.biases.iter().any(|b| !b.is_finite()) {
        return Err(invalid("params.biases", "must be finite"));
    }
    if !(p.probe_tolerance > 0.0) {
        return Err(invalid("params.probe_tolerance", "must be positive"));
    }
    let t = &spec.tolerances;
    if !(t.energy > 0.0 && t.vacancy_mass > 0.0 && t.carrier_balance > 0.0) {
        return Err(invalid("tolerances", "must be positive"));
    }
    if let Some(u) = spec.units {
        if !(u.thermal_voltage > 0.0 && u.length > 0.0 && u.time > 0.0) {
            return Err(invalid("units", "scales must be positive"));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Physical {
    thermal_voltage: f64,
    bias_volts: f64,
    contact_psi_volts: Vec<(String, f64)>,
    contact_phi_volts: Vec<(String, f64)>,
    lengths_m: Vec<(String, f64)>,
    t_end_s: f64,
}

#[derive(Serialize)]
struct Resolved<'a> {
    #[serde(flatten)]
    spec: &'a ScenarioSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    physical: Option<Physical>,
}

/// The resolved scenario as TOML, with physical values when units are given.
pub fn resolved_toml(spec: &ScenarioSpec, device: &Device) -> Result<String, toml::ser::Error> {
    let physical = spec.units.map(|u| {
        let v = device.contact_values(0.0);
        let mut lengths = vec![("x".to_string(), spec.device.geometry.x.length * u.length)];
        if let Some(y) = &spec.device.geometry.y {
            lengths.push(("y".to_string(), y.length * u.length));
        }
        Physical {
            thermal_voltage: u.thermal_voltage,
            bias_volts: spec.device.bias * u.thermal_voltage,
            contact_psi_volts: device
                .contacts
                .iter()
                .zip(&v)
                .map(|(c, v)| (c.name.clone(), v.psi * u.thermal_voltage))
                .collect(),
            contact_phi_volts: device
                .contacts
                .iter()
                .zip(&v)
                .map(|(c, v)| (c.name.clone(), v.phi * u.thermal_voltage))
                .collect(),
            lengths_m: lengths,
            t_end_s: spec.params.t_end * u.time,
        }
    });
    toml::to_string_pretty(&Resolved { spec, physical })
}

/// Names of the bundled scenarios.
pub const BUNDLED: [&str; 5] = [
    "equilibrium_1d",
    "pin_perovskite_1d",
    "pin_perovskite_2d",
    "dark_bias_sweep",
    "light_transient",
];

/// Text of a bundled scenario.
pub fn bundled_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "equilibrium_1d" => include_str!("../scenarios/equilibrium_1d.toml"),
        "pin_perovskite_1d" => include_str!("../scenarios/pin_perovskite_1d.toml"),
        "pin_perovskite_2d" => include_str!("../scenarios/pin_perovskite_2d.toml"),
        "dark_bias_sweep" => include_str!("../scenarios/dark_bias_sweep.toml"),
        "light_transient" => include_str!("../scenarios/light_transient.toml"),
        _ => return None,
    })
}

/// Loads a bundled scenario by name.
pub fn bundled(name: &str) -> Result<ScenarioSpec, ConfigError> {
    let text = bundled_text(name)
        .ok_or_else(|| invalid("scenario", format!("no bundled scenario named {name:?}")))?;
    parse_scenario(text, Path::new(name), Path::new("."), name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_column_counts_from_one() {
        let text = "a = 1\nbb = 2\n";
        assert_eq!(line_column(text, Some(0..1)), (1, 1));
        assert_eq!(line_column(text, Some(9..10)), (2, 4));
    }

    #[test]
    fn all_bundled_scenarios_parse() {
        for name in BUNDLED {
            let spec = bundled(name).unwrap();
            assert_eq!(spec.name, name);
            spec.build_device().unwrap();
        }
    }
}
