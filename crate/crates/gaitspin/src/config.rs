//! Pipeline configuration: one JSON document driving every command.
//!
//! A [`PipelineConfig`] validates against the same rules the library modules
//! enforce and hashes to a canonical digest that artifacts embed for
//! provenance. The hash is computed from the typed, canonicalized form, so
//! reordering keys in the JSON file does not change it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::fields::{Direction, GridSpec};
use crate::model::{RobotSpec, ShapeBasis};
use crate::planner::PlanMethod;

/// Version tag embedded in every file this crate reads or writes.
pub const SCHEMA_ID: &str = "gaitspin/v1";

/// Default cycle site count.
pub const DEFAULT_CYCLE_SITES: usize = 24;

/// Default shape amplitude in radians.
pub const DEFAULT_AMPLITUDE: f64 = PI / 3.0;

/// Hard bound on shape-cycle amplitude, radians.
pub const AMPLITUDE_LIMIT: f64 = PI / 3.0 + 1e-12;

fn default_schema() -> String {
    SCHEMA_ID.to_string()
}

/// Shape-cycle sampling family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingKind {
    /// Circle of constant amplitude in the two shape coordinates.
    Circle,
}

/// Shape-cycle sampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub kind: SamplingKind,
    /// Number of cycle sites M.
    pub m: usize,
    /// Cycle amplitude in radians.
    pub amplitude: f64,
}

/// Contact-pattern enumeration filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactFilterConfig {
    /// Minimum number of stance legs.
    pub min_stance: usize,
    /// Drop patterns whose stance legs all lie on one side.
    pub exclude_unilateral: bool,
}

/// Planner stage parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub direction: Direction,
    pub method: PlanMethod,
    /// Allowed switch counts.
    pub k_set: Vec<usize>,
    /// Switching penalty λ ≥ 0.
    pub lambda: f64,
}

/// Simulation stage parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Integration substeps per gait arc.
    pub substeps: usize,
    /// Number of cycles to integrate.
    pub cycles: usize,
    /// Simulate the plan composed with its anti-symmetric partner.
    #[serde(default)]
    pub composed: bool,
}

/// Artifact locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub cache_dir: PathBuf,
    pub out_dir: PathBuf,
}

/// The full pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub robot: RobotSpec,
    pub basis: ShapeBasis,
    pub grid: GridSpec,
    pub sampling: SamplingConfig,
    pub contact_filter: ContactFilterConfig,
    pub planner: PlannerConfig,
    pub sim: SimConfig,
    pub paths: PathsConfig,
}

impl PipelineConfig {
    /// Default hexapod forward-planning pipeline.
    pub fn hexapod_default() -> Self {
        Self {
            schema: SCHEMA_ID.to_string(),
            robot: RobotSpec::hexapod(),
            basis: ShapeBasis::Sinusoidal { spatial_frequency: 1.0 },
            grid: GridSpec::for_amplitude(DEFAULT_AMPLITUDE).expect("default grid is valid"),
            sampling: SamplingConfig {
                kind: SamplingKind::Circle,
                m: DEFAULT_CYCLE_SITES,
                amplitude: DEFAULT_AMPLITUDE,
            },
            contact_filter: ContactFilterConfig { min_stance: 3, exclude_unilateral: true },
            planner: PlannerConfig {
                direction: Direction::X,
                method: PlanMethod::DomainWall,
                k_set: vec![0, 2, 3, 4, 5, 6],
                lambda: 0.0,
            },
            sim: SimConfig { substeps: 100, cycles: 1, composed: false },
            paths: PathsConfig {
                cache_dir: PathBuf::from("cache"),
                out_dir: PathBuf::from("out"),
            },
        }
    }

    /// Default centipede sidewinding pipeline.
    ///
    /// The centipede spreads its body wave over five joints, so each joint
    /// bends through a smaller angle than the hexapod's two; the grid
    /// shrinks with the amplitude to keep its resolution.
    pub fn centipede_default() -> Self {
        let amplitude = std::f64::consts::PI / 12.0;
        let mut config = Self::hexapod_default();
        config.robot = RobotSpec::centipede();
        config.grid = GridSpec::for_amplitude(amplitude).expect("centipede grid is valid");
        config.sampling.amplitude = amplitude;
        config.contact_filter = ContactFilterConfig { min_stance: 8, exclude_unilateral: true };
        config.planner.direction = Direction::Y;
        config
    }

    /// Checks every sub-configuration under its module's rules.
    pub fn validate(self) -> Result<Self> {
        if self.schema != SCHEMA_ID {
            return Err(Error::argument(format!(
                "config schema {:?} does not match {SCHEMA_ID:?}",
                self.schema
            )));
        }
        let robot = self.robot.clone().validate()?;
        GridSpec::new(self.grid.half_extent, self.grid.resolution)?;
        if self.sampling.m < 3 {
            return Err(Error::argument("sampling.m must be at least 3"));
        }
        if !self.sampling.amplitude.is_finite() || self.sampling.amplitude < 0.0 {
            return Err(Error::argument(
                "sampling.amplitude must be finite and non-negative",
            ));
        }
        if self.sampling.amplitude > AMPLITUDE_LIMIT {
            return Err(Error::argument(format!(
                "sampling.amplitude {} exceeds the joint bound {}",
                self.sampling.amplitude,
                PI / 3.0
            )));
        }
        if self.grid.half_extent < self.sampling.amplitude {
            return Err(Error::argument(format!(
                "grid.half_extent {} does not cover sampling.amplitude {}",
                self.grid.half_extent, self.sampling.amplitude
            )));
        }
        if self.contact_filter.min_stance > robot.n_legs() {
            return Err(Error::argument(format!(
                "contact_filter.min_stance {} exceeds the robot's {} legs",
                self.contact_filter.min_stance,
                robot.n_legs()
            )));
        }
        if !self.planner.lambda.is_finite() || self.planner.lambda < 0.0 {
            return Err(Error::argument("planner.lambda must be finite and non-negative"));
        }
        if self.planner.k_set.is_empty() {
            return Err(Error::argument("planner.k_set must not be empty"));
        }
        if self.sim.substeps < crate::gait::MIN_SUBSTEPS_PER_ARC {
            return Err(Error::argument(format!(
                "sim.substeps must be at least {}",
                crate::gait::MIN_SUBSTEPS_PER_ARC
            )));
        }
        if self.sim.cycles == 0 {
            return Err(Error::argument("sim.cycles must be at least 1"));
        }
        Ok(Self { robot, ..self })
    }

    /// Parses and validates a configuration from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)
            .map_err(|e| Error::argument(format!("config parse error: {e}")))?;
        config.validate()
    }

    /// Canonical content hash: SHA-256 over the canonical JSON encoding.
    ///
    /// Canonicalization serializes the typed struct through a JSON value
    /// whose object keys are sorted, so the digest ignores key order and
    /// whitespace in the source file.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("canonical JSON serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            write!(out, "{byte:02x}").expect("hex formatting");
        }
        out
    }

    /// First 16 hex digits of [`Self::hash`], used in file names and logs.
    pub fn short_hash(&self) -> String {
        self.hash()[..16].to_string()
    }
}
