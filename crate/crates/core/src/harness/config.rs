//! `run.json`: the full description of one experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::initial::InitialSpec;
use crate::diagnostics::{default_k, DiagnosticsConfig};
use crate::grid::{Geometry, Grid};
use crate::model::{validate_model, ModelSpec, Regime};
use crate::stepper::StepOptions;
use crate::{Error, Result};

pub const RUN_SCHEMA: &str = "kslab.run/v1";

/// Range of `v` over which coefficients are certified when a config is loaded.
pub const VALIDATION_V_MAX: f64 = 50.0;
pub const VALIDATION_SAMPLES: usize = 501;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub model: ModelSpec,
    pub grid: Geometry,
    #[serde(default)]
    pub initial: InitialSpec,
    pub t_end: f64,
    #[serde(default)]
    pub step: StepOptions,
    #[serde(default)]
    pub diagnostics: DiagnosticsSettings,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_schema() -> String {
    RUN_SCHEMA.to_string()
}

/// Diagnostics as written in the config; unset entries are filled per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSettings {
    /// Energy exponent; 1 for nondegenerate diffusion, 3/2 for degenerate.
    pub k: Option<f64>,
    pub q_list: Vec<f64>,
    /// Dissipation window; `min(1, t_end / 2)` when unset.
    pub tau: Option<f64>,
    /// Time between records; `t_end / 100` when unset.
    pub cadence: Option<f64>,
    pub blowup_max_u: f64,
    pub blowup_dt_floor: f64,
}

impl Default for DiagnosticsSettings {
    fn default() -> Self {
        DiagnosticsSettings {
            k: None,
            q_list: vec![2.0, 4.0, 8.0],
            tau: None,
            cadence: None,
            blowup_max_u: 1e6,
            blowup_dt_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Run directory; relative paths are placed under `KSLAB_OUT` when it is set.
    pub dir: Option<PathBuf>,
    /// Time between field snapshots; no snapshots when unset.
    pub snapshot_every: Option<f64>,
}

impl OutputSpec {
    pub fn resolve_dir(&self) -> Option<PathBuf> {
        let dir = self.dir.clone()?;
        match std::env::var_os("KSLAB_OUT") {
            Some(root) if dir.is_relative() => Some(PathBuf::from(root).join(dir)),
            _ => Some(dir),
        }
    }
}

/// A validated config with every default made concrete.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub grid: Grid,
    pub diagnostics: DiagnosticsConfig,
    pub regime: Regime,
    pub warnings: Vec<String>,
}

impl RunConfig {
    /// Minimal config on the given grid; everything else takes its default.
    pub fn new(model: ModelSpec, grid: Geometry, t_end: f64) -> Self {
        RunConfig {
            schema: default_schema(),
            model,
            grid,
            initial: InitialSpec::default(),
            t_end,
            step: StepOptions::default(),
            diagnostics: DiagnosticsSettings::default(),
            output: OutputSpec::default(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field and fills in regime-dependent defaults.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        if self.schema != RUN_SCHEMA {
            return Err(Error::config(
                "schema",
                format!("expected {RUN_SCHEMA:?}, found {:?}", self.schema),
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::config("t_end", "must be a positive finite time"));
        }
        if let Some(source) = &self.model.source {
            source.validate().map_err(|e| match e {
                Error::InvalidConfig { field, message } => {
                    Error::config(format!("model.{field}"), message)
                }
                other => other,
            })?;
        }
        let report = validate_model(&self.model, VALIDATION_V_MAX, VALIDATION_SAMPLES);
        if let Some(failure) = report.failures().next() {
            let field = if failure.name.starts_with("diffusion") {
                "model.diffusion"
            } else if failure.name.starts_with("sensitivity") {
                "model.sensitivity"
            } else {
                "model.source"
            };
            let witness = failure
                .witness
                .map(|v| format!(" (at v = {v})"))
                .unwrap_or_default();
            return Err(Error::config(
                field,
                format!("{}: {}{witness}", failure.name, failure.detail),
            ));
        }
        let grid = Grid::new(self.grid).map_err(|e| match e {
            Error::InvalidConfig { message, .. } => Error::config("grid", message),
            other => other,
        })?;
        self.initial.validate(&self.grid)?;
        self.step.validate()?;

        let p = self.model.damping_exponent();
        let settings = &self.diagnostics;
        let diagnostics = DiagnosticsConfig {
            k: settings.k.unwrap_or_else(|| default_k(report.regime)),
            q_list: settings.q_list.clone(),
            tau: settings.tau.unwrap_or_else(|| (self.t_end / 2.0).min(1.0)),
            cadence: settings.cadence.unwrap_or(self.t_end / 100.0),
            blowup_max_u: settings.blowup_max_u,
            blowup_dt_floor: settings.blowup_dt_floor,
        };
        diagnostics.validate()?;
        if let Some(every) = self.output.snapshot_every {
            if !(every > 0.0) {
                return Err(Error::config("output.snapshot_every", "must be > 0"));
            }
        }

        let mut warnings = report.warnings.clone();
        if self.model.source.is_some() {
            warnings.extend(diagnostics.k_warning(report.regime, p));
        }
        Ok(ResolvedRun {
            config: self.clone(),
            grid,
            diagnostics,
            regime: report.regime,
            warnings,
        })
    }
}

/// Reads, parses and validates a run config.
pub fn load_config(path: &Path) -> Result<ResolvedRun> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_json(&text)?.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ChemotaxisScheme;
    use crate::stepper::SourceTreatment;

    const MINIMAL: &str = r#"{
        "model": {
            "diffusion": {"family": "constant", "value": 1.0},
            "sensitivity": {"family": "constant", "value": 1.0},
            "source": {"r": 0.0, "mu": 1.0, "p": 0.5}
        },
        "grid": {"geometry": "rectangle", "lx": 1.0, "ly": 1.0, "nx": 16, "ny": 16},
        "t_end": 1.0
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let run = RunConfig::from_json(MINIMAL).unwrap().resolve().unwrap();
        assert_eq!(run.config.step.chemotaxis, ChemotaxisScheme::Upwind);
        assert_eq!(run.config.step.source, SourceTreatment::Patankar);
        assert_eq!(run.diagnostics.k, 1.0);
        assert_eq!(run.diagnostics.tau, 0.5);
        assert_eq!(run.regime, Regime::Nondegenerate);
        assert!(run.warnings.is_empty(), "{:?}", run.warnings);
    }

    #[test]
    fn negative_mu_names_the_field() {
        let text = MINIMAL.replace(r#""mu": 1.0"#, r#""mu": -1.0"#);
        let err = RunConfig::from_json(&text).unwrap().resolve().unwrap_err();
        match err {
            Error::InvalidConfig { field, message } => {
                assert_eq!(field, "model.source.mu");
                assert!(message.contains("mu"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_large_p_warns() {
        let text = MINIMAL
            .replace(
                r#""diffusion": {"family": "constant", "value": 1.0}"#,
                r#""diffusion": {"family": "exponential_decay", "amplitude": 1.0, "rate": 1.0}"#,
            )
            .replace(r#""p": 0.5"#, r#""p": 0.9"#);
        let run = RunConfig::from_json(&text).unwrap().resolve().unwrap();
        assert_eq!(run.regime, Regime::Degenerate);
        assert_eq!(run.diagnostics.k, 1.5);
        assert!(run.warnings.iter().any(|w| w.contains("1/2")));
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let text = MINIMAL.replace(r#""t_end": 1.0"#, r#""t_end": 1.0, "tend": 2.0"#);
        match RunConfig::from_json(&text).unwrap_err() {
            Error::Parse { line, message, .. } => {
                let expected = text.lines().position(|l| l.contains("tend")).unwrap() + 1;
                assert_eq!(line, expected);
                assert!(message.contains("tend"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn wrong_schema() {
        let text = MINIMAL.replacen('{', r#"{"schema": "kslab.run/v0","#, 1);
        assert!(matches!(
            RunConfig::from_json(&text).unwrap().resolve(),
            Err(Error::InvalidConfig { .. })
        ));
    }
}
