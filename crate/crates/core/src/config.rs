//! Experiment configuration files (TOML).
//!
//! A config describes one scenario plus how to expand it into runs: a list
//! of seeds and, optionally, one swept parameter. See `configs/` in the
//! repository for complete examples.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::BmoError;
use crate::field::{Field, FieldSpec};
use crate::kernel::InitSpec;
use crate::params::{BmoParams, SelectionMode, DEFAULT_GAMMA, DEFAULT_LAMBDA_FRACTION, DEFAULT_RHO};
use crate::sim::Scenario;

pub const SCHEMA_VERSION: u32 = 1;

/// Parameters that a `[sweep]` section may vary.
pub const SWEEPABLE: &[&str] = &[
    "rho",
    "gamma",
    "lambda_d",
    "step_size",
    "n_agents",
    "max_iters",
    "fitness_eps",
    "sensor_sigma",
    "capture_radius",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Syntax or schema error; the message carries line and column.
    #[error("{0}")]
    Parse(String),
    /// Semantic error; `key` is the dotted path of the offending entry.
    #[error("invalid config: {key}: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }

    /// 1-based line of the offending entry in `text`, when it can be found.
    pub fn line(&self, text: &str) -> Option<usize> {
        match self {
            ConfigError::Parse(_) => None,
            ConfigError::Invalid { key, .. } => line_of_key(text, key),
        }
    }
}

/// Finds `key` (`section.leaf` or `leaf`) in TOML text, falling back to the section header.
pub fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let (section, leaf) = match key.rsplit_once('.') {
        Some((s, l)) => (s, l),
        None => ("", key),
    };
    let mut current = String::new();
    let mut header = None;
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            current = t.trim_matches(|c| c == '[' || c == ']').trim().to_owned();
            if (current == section || current == key) && header.is_none() {
                header = Some(n + 1);
            }
            continue;
        }
        if current == section {
            if let Some(rest) = t.strip_prefix(leaf) {
                if rest.trim_start().starts_with('=') {
                    return Some(n + 1);
                }
            }
        }
    }
    header
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Defaults to a tenth of the bounds diagonal.
    pub lambda_d: Option<f64>,
    pub step_size: f64,
    pub n_agents: usize,
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub selection_mode: SelectionMode,
    #[serde(default)]
    pub fitness_eps: f64,
}

fn default_rho() -> f64 {
    DEFAULT_RHO
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub sensor_sigma: f64,
    pub capture_radius: f64,
    #[serde(default)]
    pub init: InitSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Run seeds `params.seed .. params.seed + count`.
    pub count: Option<u64>,
    /// Explicit seed list; exclusive with `count`.
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitConfig {
    #[serde(default = "yes")]
    pub trace: bool,
    #[serde(default = "yes")]
    pub summary: bool,
    #[serde(default)]
    pub svg: bool,
}

impl Default for EmitConfig {
    fn default() -> Self {
        EmitConfig {
            trace: true,
            summary: true,
            svg: false,
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Agents needed within the capture radius for a peak to count as captured.
    #[serde(default = "one")]
    pub min_count: usize,
    /// Peaks to score against; defaults to the field's known peaks at the final step.
    pub peaks: Option<Vec<Vec<f64>>>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            min_count: 1,
            peaks: None,
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub output_dir: Option<PathBuf>,
    pub field: FieldSpec,
    pub params: ParamsConfig,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub emit: EmitConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

/// One concrete run of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub seed: u64,
    /// `(parameter, value)` when the experiment sweeps.
    pub sweep: Option<(String, f64)>,
    pub scenario: Scenario,
}

impl RunSpec {
    /// File stem unique within the experiment, e.g. `step_size=0.1_seed3`.
    pub fn stem(&self) -> String {
        match &self.sweep {
            Some((name, value)) => format!("{name}={value}_seed{}", self.seed),
            None => format!("seed{}", self.seed),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, m: String| Err(ConfigError::invalid(key, m));
        if self.schema_version != SCHEMA_VERSION {
            return invalid("schema_version", format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        match (&self.ensemble.count, &self.ensemble.seeds) {
            (Some(_), Some(_)) => {
                return invalid("ensemble.seeds", "give either count or seeds".into())
            }
            (Some(0), None) => return invalid("ensemble.count", "must be >= 1".into()),
            (None, Some(s)) if s.is_empty() => return invalid("ensemble.seeds", "is empty".into()),
            _ => {}
        }
        if let Some(sweep) = &self.sweep {
            if !SWEEPABLE.contains(&sweep.parameter.as_str()) {
                return invalid(
                    "sweep.parameter",
                    format!("'{}' is not one of {SWEEPABLE:?}", sweep.parameter),
                );
            }
            if sweep.values.is_empty() {
                return invalid("sweep.values", "is empty".into());
            }
        }
        self.runs().map(|_| ())
    }

    pub fn seeds(&self) -> Vec<u64> {
        match (&self.ensemble.count, &self.ensemble.seeds) {
            (_, Some(seeds)) => seeds.clone(),
            (Some(n), None) => (0..*n).map(|k| self.params.seed + k).collect(),
            (None, None) => vec![self.params.seed],
        }
    }

    pub fn base_scenario(&self) -> Scenario {
        let p = &self.params;
        let lambda_d = p
            .lambda_d
            .unwrap_or_else(|| DEFAULT_LAMBDA_FRACTION * self.field.bounds().diagonal());
        Scenario {
            name: self.name.clone(),
            field: self.field.clone(),
            params: BmoParams {
                rho: p.rho,
                gamma: p.gamma,
                lambda_d,
                step_size: p.step_size,
                n_agents: p.n_agents,
                max_iters: p.max_iters,
                seed: p.seed,
                selection_mode: p.selection_mode,
                fitness_eps: p.fitness_eps,
            },
            sensor_sigma: self.scenario.sensor_sigma,
            init: self.scenario.init.clone(),
            capture_radius: self.scenario.capture_radius,
        }
    }

    /// Every run in order: sweep values outermost, seeds innermost.
    pub fn runs(&self) -> Result<Vec<RunSpec>, ConfigError> {
        let base = self.base_scenario();
        let variants: Vec<(Option<(String, f64)>, Scenario)> = match &self.sweep {
            None => vec![(None, base)],
            Some(sweep) => sweep
                .values
                .iter()
                .map(|v| {
                    let s = apply_sweep(&base, &sweep.parameter, *v)?;
                    Ok((Some((sweep.parameter.clone(), *v)), s))
                })
                .collect::<Result<_, ConfigError>>()?,
        };
        let seeds = self.seeds();
        let mut runs = Vec::with_capacity(variants.len() * seeds.len());
        for (sweep, scenario) in &variants {
            scenario.validate().map_err(|e| {
                let at = sweep
                    .as_ref()
                    .map(|(n, v)| format!(" (with {n} = {v})"))
                    .unwrap_or_default();
                let key = match &e {
                    BmoError::InvalidField(_) => "field",
                    BmoError::InvalidInit(_) => "scenario.init",
                    BmoError::InvalidParams(m)
                        if m.starts_with("sensor_sigma") || m.starts_with("capture_radius") =>
                    {
                        "scenario"
                    }
                    _ => "params",
                };
                ConfigError::invalid(key, format!("{e}{at}"))
            })?;
            for &seed in &seeds {
                runs.push(RunSpec {
                    seed,
                    sweep: sweep.clone(),
                    scenario: scenario.with_seed(seed),
                });
            }
        }
        Ok(runs)
    }

    /// Peaks used for capture scoring of `scenario` at its last step.
    pub fn peaks_for(&self, scenario: &Scenario) -> Option<Vec<Vec<f64>>> {
        self.analysis.peaks.clone().or_else(|| {
            scenario
                .field
                .known_peaks(scenario.params.max_iters as u64)
        })
    }
}

fn apply_sweep(base: &Scenario, name: &str, value: f64) -> Result<Scenario, ConfigError> {
    let count = |v: f64| {
        if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
            Ok(v as usize)
        } else {
            Err(ConfigError::invalid(
                "sweep.values",
                format!("{v} is not a valid count for '{name}'"),
            ))
        }
    };
    let mut s = base.clone();
    match name {
        "rho" => s.params.rho = value,
        "gamma" => s.params.gamma = value,
        "lambda_d" => s.params.lambda_d = value,
        "step_size" => s.params.step_size = value,
        "n_agents" => s.params.n_agents = count(value)?,
        "max_iters" => s.params.max_iters = count(value)?,
        "fitness_eps" => s.params.fitness_eps = value,
        "sensor_sigma" => s.sensor_sigma = value,
        "capture_radius" => s.capture_radius = value,
        other => {
            return Err(ConfigError::invalid(
                "sweep.parameter",
                format!("'{other}' is not one of {SWEEPABLE:?}"),
            ))
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
name = "tiny"

[field]
kind = "gaussian_peaks"
centers = [[0.0, 0.0]]
amplitudes = [1.0]
sigma = 0.5
bounds = { lower = [-1.0, -1.0], upper = [1.0, 1.0] }

[params]
step_size = 0.05
n_agents = 5
max_iters = 10
seed = 4

[scenario]
capture_radius = 0.2
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let s = cfg.base_scenario();
        assert_eq!(s.params.rho, DEFAULT_RHO);
        assert_eq!(s.params.gamma, DEFAULT_GAMMA);
        assert!((s.params.lambda_d - 0.1 * 8f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.init, InitSpec::Uniform);
        assert_eq!(s.sensor_sigma, 0.0);
        assert_eq!(cfg.seeds(), vec![4]);
        assert_eq!(cfg.emit, EmitConfig::default());
    }

    #[test]
    fn ensemble_count_offsets_from_base_seed() {
        let text = format!("{MINIMAL}\n[ensemble]\ncount = 3\n");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.seeds(), vec![4, 5, 6]);
        let runs = cfg.runs().unwrap();
        assert_eq!(runs.len(), 3);
        assert_eq!(runs[2].scenario.params.seed, 6);
        assert_eq!(runs[2].stem(), "seed6");
    }

    #[test]
    fn sweep_expands_values_times_seeds() {
        let text = format!(
            "{MINIMAL}\n[ensemble]\nseeds = [1, 2]\n[sweep]\nparameter = \"step_size\"\nvalues = [0.1, 0.2, 0.3]\n"
        );
        let runs = ExperimentConfig::from_toml_str(&text).unwrap().runs().unwrap();
        assert_eq!(runs.len(), 6);
        assert_eq!(runs[3].scenario.params.step_size, 0.2);
        assert_eq!(runs[3].seed, 2);
        assert_eq!(runs[3].stem(), "step_size=0.2_seed2");
    }

    #[test]
    fn unknown_key_is_named_with_line() {
        let text = MINIMAL.replace("seed = 4", "seed = 4\nstepsize = 3");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(msg.contains("stepsize"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn bad_sweep_parameter() {
        let text = format!("{MINIMAL}\n[sweep]\nparameter = \"colour\"\nvalues = [1.0]\n");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "sweep.parameter"));
        assert_eq!(err.line(&text), Some(text.lines().count() - 1));
        let text = format!("{MINIMAL}\n[sweep]\nparameter = \"n_agents\"\nvalues = [2.5]\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for (from, to) in [
            ("schema_version = 1", "schema_version = 9"),
            ("capture_radius = 0.2", "capture_radius = 0.0"),
            ("n_agents = 5", "n_agents = 0"),
            ("sigma = 0.5", "sigma = -0.5"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(ExperimentConfig::from_toml_str(&text).is_err(), "{to}");
        }
        let text = format!("{MINIMAL}\n[ensemble]\ncount = 2\nseeds = [1]\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn key_lookup() {
        assert_eq!(line_of_key(MINIMAL, "schema_version"), Some(2));
        assert_eq!(line_of_key(MINIMAL, "params.n_agents"), Some(14));
        assert_eq!(line_of_key(MINIMAL, "params"), Some(12));
        assert_eq!(line_of_key(MINIMAL, "scenario.init"), Some(18));
        assert_eq!(line_of_key(MINIMAL, "sweep.values"), None);
    }

    #[test]
    fn explicit_init_must_fit_bounds() {
        let text = MINIMAL.replace(
            "capture_radius = 0.2",
            "capture_radius = 0.2\ninit = { kind = \"explicit\", positions = [[0.0, 0.0], [0.1, 0.1], [0.2, 0.2], [0.3, 0.3], [3.0, 0.0]] }",
        );
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }
}
