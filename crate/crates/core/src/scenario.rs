//! Versioned scenario files tying together plant, surface, design,
//! controller, simulation and metrics settings.
//!
//! Relative paths inside a scenario resolve against the scenario file's
//! directory. Unknown fields are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coefficients::{default_surface, load_surface, CoefficientSurface};
use crate::control::{BaselineConfig, EstimatorMode, GainSchedule, RefreshPolicy};
use crate::design::DesignConfig;
use crate::metrics::MetricsConfig;
use crate::sim::{ControllerKind, ControllerSetup, SimulationConfig, WindMode};
use crate::turbine::TurbineParameters;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfaceSource {
    Files { cp: PathBuf, ct: PathBuf },
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default)]
    pub estimator: EstimatorMode,
    #[serde(default)]
    pub refresh: RefreshPolicy,
    #[serde(default)]
    pub baseline: BaselineConfig,
    /// Precomputed gain schedule; synthesized from `design` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<PathBuf>,
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self {
            estimator: EstimatorMode::default(),
            refresh: RefreshPolicy::default(),
            baseline: BaselineConfig::default(),
            gains: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    /// Turbine parameter JSON, or `"default"`.
    #[serde(default = "default_source")]
    pub turbine: PathBuf,
    #[serde(default = "default_surface_source")]
    pub surface: SurfaceSource,
    pub design: DesignConfig,
    #[serde(default)]
    pub controller: ControllerSection,
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_source() -> PathBuf {
    PathBuf::from("default")
}

fn is_default(p: &Path) -> bool {
    p.as_os_str() == "default"
}

fn default_surface_source() -> SurfaceSource {
    SurfaceSource::Named("default".into())
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl Scenario {
    /// Scenario with every section at its documented default: robust LQ at
    /// 80 % of rated power in 14.8 m/s turbulent wind with 6 % intensity.
    pub fn default_for(params: &TurbineParameters) -> Self {
        let p_ref = 0.8 * params.p_rated;
        Self {
            schema_version: SCHEMA_VERSION,
            turbine: default_source(),
            surface: default_surface_source(),
            design: DesignConfig::with_defaults(p_ref),
            controller: ControllerSection::default(),
            simulation: SimulationConfig {
                ts: 0.004,
                integrator_substeps: 4,
                duration: 600.0,
                wind: crate::sim::WindSpec::turbulent(14.8, 0.06),
                seed: 1,
                controller: ControllerKind::RobustLq,
                p_ref,
                initial: Default::default(),
            },
            metrics: MetricsConfig::default(),
            output_dir: default_output(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let mut s: Scenario = serde_json::from_str(text).map_err(|e| {
            Error::parse(
                origin,
                format!("line {}, column {}: {e}", e.line(), e.column()),
            )
        })?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "{origin}: unsupported schema_version {} (expected {SCHEMA_VERSION})",
                s.schema_version
            )));
        }
        s.base_dir = PathBuf::new();
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        let mut s = Self::from_json(&text, &path.display().to_string())?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        s.check_files()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Every referenced file exists.
    pub fn check_files(&self) -> Result<()> {
        let mut files = Vec::new();
        if !is_default(&self.turbine) {
            files.push(self.turbine.clone());
        }
        match &self.surface {
            SurfaceSource::Files { cp, ct } => {
                files.push(cp.clone());
                files.push(ct.clone());
            }
            SurfaceSource::Named(n) if n != "default" => {
                return Err(Error::Validation(format!(
                    "surface: unknown named surface `{n}` (use \"default\" or {{\"cp\": .., \"ct\": ..}})"
                )))
            }
            SurfaceSource::Named(_) => {}
        }
        if let Some(g) = &self.controller.gains {
            files.push(g.clone());
        }
        if self.simulation.wind.mode == WindMode::File {
            if let Some(f) = &self.simulation.wind.file {
                files.push(f.clone());
            }
        }
        for f in files {
            let full = self.resolve(&f);
            if !full.is_file() {
                return Err(Error::Validation(format!(
                    "referenced file {} does not exist",
                    full.display()
                )));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<TurbineParameters> {
        if is_default(&self.turbine) {
            Ok(TurbineParameters::default())
        } else {
            TurbineParameters::load(&self.resolve(&self.turbine))
        }
    }

    pub fn surface(&self) -> Result<CoefficientSurface> {
        match &self.surface {
            SurfaceSource::Files { cp, ct } => load_surface(&self.resolve(cp), &self.resolve(ct)),
            SurfaceSource::Named(_) => Ok(default_surface()),
        }
    }

    /// Simulation configuration with file paths resolved.
    pub fn simulation_config(&self) -> SimulationConfig {
        let mut c = self.simulation.clone();
        if let Some(f) = &c.wind.file {
            c.wind.file = Some(self.resolve(f));
        }
        c
    }

    pub fn load_gains(&self) -> Result<Option<GainSchedule>> {
        match &self.controller.gains {
            None => Ok(None),
            Some(p) => {
                let full = self.resolve(p);
                let text = std::fs::read_to_string(&full)?;
                let g: GainSchedule = serde_json::from_str(&text).map_err(|e| {
                    Error::parse(
                        full.display().to_string(),
                        format!("line {}, column {}: {e}", e.line(), e.column()),
                    )
                })?;
                g.validate()?;
                Ok(Some(g))
            }
        }
    }

    /// Controller setup for `kind`; the robust LQ variant needs a schedule.
    pub fn controller_setup(&self, kind: ControllerKind, schedule: Option<&GainSchedule>) -> Result<ControllerSetup> {
        Ok(match kind {
            ControllerKind::RobustLq => ControllerSetup::RobustLq {
                schedule: schedule
                    .cloned()
                    .ok_or_else(|| Error::Validation("robust-lq controller needs gains".into()))?,
                refresh: self.controller.refresh,
                estimator: self.controller.estimator,
            },
            ControllerKind::Baseline => ControllerSetup::Baseline {
                config: self.controller.baseline,
                estimator: self.controller.estimator,
            },
        })
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.params()?;
        self.design.validate(&params)?;
        self.simulation.validate()?;
        for c in &self.metrics.channels {
            if !(c.woehler_exponent >= 1.0) {
                return Err(Error::Validation(format!(
                    "metrics: Woehler exponent of {} must be at least 1",
                    c.channel.name()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trip() {
        let s = Scenario::default_for(&TurbineParameters::default());
        let text = s.to_json().unwrap();
        let back = Scenario::from_json(&text, "mem").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_field_rejected_with_position() {
        let s = Scenario::default_for(&TurbineParameters::default());
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        v["simulation"]["bogus"] = serde_json::json!(1);
        let err = Scenario::from_json(&serde_json::to_string_pretty(&v).unwrap(), "mem").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn wrong_version_rejected() {
        let s = Scenario::default_for(&TurbineParameters::default());
        let text = s.to_json().unwrap().replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(matches!(Scenario::from_json(&text, "mem"), Err(Error::Validation(_))));
    }
}
