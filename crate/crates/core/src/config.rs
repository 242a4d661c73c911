//! Run configuration: one JSON document describing the system, integration
//! tolerances, sampling and outputs.
//!
//! Unknown fields are rejected. Parse errors carry line and column; semantic
//! errors name the offending field.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynsys::{make_ball_system, make_rigid_body, PhasePoint, SurfaceProfile, SystemKind, SystemSpec, Tolerances};
use crate::error::{Error, Result};
use crate::verify::{default_family_range, energy_family, CheckName, SamplingRegion};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variables that override `integration` fields.
pub const ENV_OVERRIDES: &[(&str, &str)] = &[
    ("PHASEMAP_TOL", "tol"),
    ("PHASEMAP_TOL_PHASE", "tol_phase"),
    ("PHASEMAP_TOL_CLOSURE", "tol_closure"),
    ("PHASEMAP_T_MAX", "t_max"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Ball { profile: SurfaceProfile, annulus: [f64; 2] },
    RigidBody { inertia: [f64; 3] },
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig::Ball {
            profile: SurfaceProfile::paraboloid(0.5),
            annulus: [0.2, 3.0],
        }
    }
}

impl SystemConfig {
    pub fn kind(&self) -> SystemKind {
        match self {
            SystemConfig::Ball { .. } => SystemKind::Ball,
            SystemConfig::RigidBody { .. } => SystemKind::RigidBody,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub seed: u64,
    pub count: usize,
    pub region: SamplingRegion,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            seed: 0,
            count: 50,
            region: SamplingRegion::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub t_end: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { t_end: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusGrid {
    pub alpha_steps: usize,
    /// Per torus direction.
    pub beta_steps: usize,
}

impl Default for TorusGrid {
    fn default() -> Self {
        TorusGrid {
            alpha_steps: 8,
            beta_steps: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub count: usize,
    /// Family parameter range; the system's default when absent.
    pub range: Option<[f64; 2]>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { count: 50, range: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// All checks when absent.
    pub checks: Option<Vec<CheckName>>,
    /// Per-check tolerance overrides.
    pub tolerances: BTreeMap<CheckName, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub integration: Tolerances,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Used by `simulate`, `phase` and `torus`; a family point when absent.
    #[serde(default)]
    pub initial_condition: Option<PhasePoint>,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub torus: TorusGrid,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            system: SystemConfig::default(),
            integration: Tolerances::default(),
            sampling: SamplingConfig::default(),
            output: OutputConfig::default(),
            initial_condition: None,
            simulate: SimulateConfig::default(),
            torus: TorusGrid::default(),
            sweep: SweepConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parse without validating.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    /// Read `path` (defaults when `None`), apply environment overrides, validate.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_json(&text).map_err(|e| match e {
                    Error::Config(msg) => Error::Config(format!("{}: {msg}", p.display())),
                    other => other,
                })?
            }
            None => RunConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        for (var, field) in ENV_OVERRIDES {
            let Some(raw) = lookup(var) else { continue };
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{var}={raw:?} is not a number")))?;
            let t = &mut self.integration;
            match *field {
                "tol" => t.tol = v,
                "tol_phase" => t.tol_phase = v,
                "tol_closure" => t.tol_closure = v,
                "t_max" => t.t_max = v,
                _ => unreachable!(),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let spec = self.system_spec()?;
        self.sampling.region.validate()?;
        if self.sampling.count == 0 {
            return Err(Error::Config("sampling.count must be at least 1".into()));
        }
        if !(self.simulate.t_end.is_finite() && self.simulate.t_end > 0.0) {
            return Err(Error::Config(format!(
                "simulate.t_end must be positive, got {}",
                self.simulate.t_end
            )));
        }
        if self.torus.alpha_steps == 0 || self.torus.beta_steps == 0 {
            return Err(Error::Config("torus grid steps must be at least 1".into()));
        }
        if self.sweep.count < 2 {
            return Err(Error::Config("sweep.count must be at least 2".into()));
        }
        if let Some([a, b]) = self.sweep.range {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::Config(format!("sweep.range must be finite, got [{a}, {b}]")));
            }
        }
        for (check, tol) in &self.verify.tolerances {
            if !(*tol > 0.0) {
                return Err(Error::Config(format!("verify.tolerances.{check} must be positive")));
            }
        }
        if let Some(m) = &self.initial_condition {
            if m.kind() != spec.kind() {
                return Err(Error::Config(format!(
                    "initial_condition is a {} state but the system is {}",
                    m.kind(),
                    spec.kind()
                )));
            }
        }
        Ok(())
    }

    pub fn system_spec(&self) -> Result<SystemSpec> {
        self.integration.validate()?;
        let spec = match &self.system {
            SystemConfig::Ball { profile, annulus } => make_ball_system(profile.clone(), (annulus[0], annulus[1]))?,
            SystemConfig::RigidBody { inertia } => make_rigid_body(*inertia)?,
        };
        Ok(spec.with_tolerances(self.integration.clone()))
    }

    /// The configured initial condition, or the middle of the energy family.
    pub fn initial_condition(&self, spec: &SystemSpec) -> Result<PhasePoint> {
        match self.initial_condition {
            Some(m) => Ok(m),
            None => Ok(energy_family(spec, 3)?[1].1),
        }
    }

    pub fn sweep_range(&self) -> (f64, f64) {
        match self.sweep.range {
            Some([a, b]) => (a, b),
            None => default_family_range(self.system.kind()),
        }
    }

    pub fn check_tolerance(&self, check: CheckName) -> f64 {
        self.verify
            .tolerances
            .get(&check)
            .copied()
            .unwrap_or_else(|| check.default_tolerance())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig {
            system: SystemConfig::RigidBody { inertia: [1.0, 2.0, 3.0] },
            ..RunConfig::default()
        };
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_field_reports_line() {
        let text = "{\n  \"system\": {\"kind\": \"rigid_body\", \"inertia\": [1, 2, 3]},\n  \"integraton\": {}\n}";
        let Err(Error::Config(msg)) = RunConfig::from_json(text) else { panic!() };
        assert!(msg.contains("integraton") && msg.contains("line 3"), "{msg}");

        let nested = "{\"integration\": {\"tol\": 1e-9,\n \"tolerance\": 1}}";
        let Err(Error::Config(msg)) = RunConfig::from_json(nested) else { panic!() };
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn semantic_errors() {
        let bad = [
            r#"{"schema_version": 2}"#,
            r#"{"integration": {"tol": -1}}"#,
            r#"{"system": {"kind": "ball", "profile": {"coeffs": [0, -0.5]}, "annulus": [0.2, 3]}}"#,
            r#"{"system": {"kind": "rigid_body", "inertia": [1, 0, 3]}}"#,
            r#"{"sampling": {"count": 0}}"#,
            r#"{"simulate": {"t_end": 0}}"#,
            r#"{"verify": {"tolerances": {"montgomery": 0}}}"#,
            r#"{"initial_condition": {"system": "rigid_body", "attitude": [1, 0, 0, 0], "omega": [1, 0, 0]}}"#,
        ];
        for text in bad {
            let cfg = RunConfig::from_json(text).unwrap();
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{text}");
        }
        assert!(RunConfig::from_json(r#"{"verify": {"checks": ["bogus"]}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"system": {"kind": "pendulum"}}"#).is_err());
    }

    #[test]
    fn environment_overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_env(|k| match k {
            "PHASEMAP_TOL" => Some("1e-8".into()),
            "PHASEMAP_T_MAX" => Some(" 50 ".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.integration.tol, 1e-8);
        assert_eq!(cfg.integration.t_max, 50.0);
        assert_eq!(cfg.integration.tol_phase, Tolerances::default().tol_phase);

        let mut cfg = RunConfig::default();
        let r = cfg.apply_env(|k| (k == "PHASEMAP_TOL_PHASE").then(|| "tight".into()));
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn check_tolerance_overrides() {
        let cfg = RunConfig::from_json(r#"{"verify": {"tolerances": {"montgomery": 1e-5}}}"#).unwrap();
        assert_eq!(cfg.check_tolerance(CheckName::Montgomery), 1e-5);
        assert_eq!(cfg.check_tolerance(CheckName::Equivariance), 5e-7);
    }
}
