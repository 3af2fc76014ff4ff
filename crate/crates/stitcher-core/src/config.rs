//! Planner configuration: a single TOML document covering the vehicle
//! envelope, the primitive objective, velocity sampling, boundary states,
//! and the world source.
//!
//! Example document:
//!
//! ```toml
//! rho = 1000.0
//! constraint_dt = 0.1
//! inflation_radius = 0.3
//! seed = 7
//!
//! [limits]
//! f_min = 0.85
//! f_max = 18.75
//! theta_max_deg = 60.0
//! v_max = 10.0
//! omega_max = 6.0
//! gravity = 9.81
//!
//! [velocity_samples]
//! magnitudes = [0.0, 5.0, 10.0]
//! cone_half_angle_deg = 20.0
//! boundary_direction_count = 2
//!
//! [start]
//! position = [1.0, 1.0, 2.0]
//! velocity = [0.0, 0.0, 0.0]
//!
//! [goal]
//! position = [24.0, 24.0, 2.0]
//! velocity = [0.0, 0.0, 0.0]
//!
//! [grid]
//! type = "perlin"
//! dims = [100, 100, 20]
//! resolution = 0.25
//! threshold = 0.14
//! octaves = 3
//! ```
//!
//! Every scalar section has a default; `[grid]` is mandatory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::checks::{ConstraintLimits, InvalidLimits};
use crate::primitives::BoundaryState;
use crate::velocity_graph::VelocitySampleConfig;
use crate::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Limits(#[from] InvalidLimits),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Boundary state as written in config files: plain arrays, optional
/// acceleration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StateSpec {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceleration: Option<[f64; 3]>,
}

impl StateSpec {
    pub fn at_rest(position: [f64; 3]) -> Self {
        StateSpec {
            position,
            velocity: [0.0; 3],
            acceleration: None,
        }
    }

    pub fn to_state(self) -> BoundaryState {
        let b = BoundaryState::new(Vec3::from(self.position), Vec3::from(self.velocity));
        match self.acceleration {
            Some(a) => BoundaryState::with_acceleration(b.position, b.velocity, Vec3::from(a)),
            None => b,
        }
    }
}

impl From<BoundaryState> for StateSpec {
    fn from(s: BoundaryState) -> Self {
        StateSpec {
            position: s.position.into(),
            velocity: s.velocity.into(),
            acceleration: s.acceleration.map(Into::into),
        }
    }
}

/// Where the occupancy grid comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GridSource {
    /// Load a saved grid file.
    File { path: PathBuf },
    /// Generate procedurally from seeded noise; the planner seed is used.
    Perlin {
        dims: [usize; 3],
        resolution: f64,
        threshold: f64,
        #[serde(default = "default_octaves")]
        octaves: u32,
    },
}

fn default_octaves() -> u32 {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    #[serde(default)]
    pub limits: ConstraintLimits,
    /// Time penalty of the primitive objective; must exceed 1.
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_velocity_samples")]
    pub velocity_samples: VelocitySampleConfig,
    pub start: StateSpec,
    pub goal: StateSpec,
    /// Envelope check sample spacing, seconds.
    #[serde(default = "default_constraint_dt")]
    pub constraint_dt: f64,
    /// Obstacle inflation applied before planning, meters; models the
    /// vehicle radius so the planner can treat it as a point.
    #[serde(default = "default_inflation_radius")]
    pub inflation_radius: f64,
    pub grid: GridSource,
    #[serde(default)]
    pub seed: u64,
    /// Reuse safe-sphere certificates across collision checks. On for
    /// planning; benchmarks switch it off so pruning verdicts do not
    /// depend on edge evaluation order.
    #[serde(default = "default_true")]
    pub use_sphere_cache: bool,
}

fn default_rho() -> f64 {
    1000.0
}

fn default_velocity_samples() -> VelocitySampleConfig {
    VelocitySampleConfig::evenly_spaced(ConstraintLimits::default().v_max, 11)
}

fn default_constraint_dt() -> f64 {
    0.1
}

fn default_inflation_radius() -> f64 {
    0.3
}

fn default_true() -> bool {
    true
}

impl PlannerConfig {
    /// A ready-to-edit configuration around the default envelope; the grid
    /// source and boundary states still describe a real small instance.
    pub fn example() -> Self {
        PlannerConfig {
            limits: ConstraintLimits::default(),
            rho: default_rho(),
            velocity_samples: VelocitySampleConfig::evenly_spaced(10.0, 5),
            start: StateSpec::at_rest([0.625, 0.625, 1.875]),
            goal: StateSpec::at_rest([18.625, 19.375, 0.625]),
            constraint_dt: default_constraint_dt(),
            inflation_radius: 0.0,
            grid: GridSource::Perlin {
                dims: [80, 80, 16],
                resolution: 0.25,
                threshold: 0.14,
                octaves: 3,
            },
            seed: 9,
            use_sphere_cache: true,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: PlannerConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.limits.validate()?;
        let err = |msg: String| Err(ConfigError::Invalid(msg));
        if !(self.rho > 1.0) || !self.rho.is_finite() {
            return err(format!("rho = {} must be finite and exceed 1", self.rho));
        }
        if !(self.constraint_dt > 0.0) || !self.constraint_dt.is_finite() {
            return err(format!(
                "constraint_dt = {} must be finite and positive",
                self.constraint_dt
            ));
        }
        if !self.inflation_radius.is_finite() || self.inflation_radius < 0.0 {
            return err(format!(
                "inflation_radius = {} must be finite and non-negative",
                self.inflation_radius
            ));
        }
        self.velocity_samples
            .validate(self.limits.v_max)
            .map_err(ConfigError::Invalid)?;
        for (name, state) in [("start", &self.start), ("goal", &self.goal)] {
            if !state.to_state().is_finite() {
                return err(format!("{name} state has non-finite components"));
            }
        }
        match &self.grid {
            GridSource::File { path } => {
                if path.as_os_str().is_empty() {
                    return err("grid file path is empty".into());
                }
            }
            GridSource::Perlin {
                dims,
                resolution,
                threshold,
                octaves,
            } => {
                if dims.iter().any(|&d| d == 0) {
                    return err(format!("perlin dims {dims:?} must all be positive"));
                }
                if !(*resolution > 0.0) || !resolution.is_finite() {
                    return err(format!("perlin resolution {resolution} must be positive"));
                }
                if !threshold.is_finite() {
                    return err(format!("perlin threshold {threshold} must be finite"));
                }
                if *octaves == 0 {
                    return err("perlin octaves must be at least 1".into());
                }
            }
        }
        Ok(())
    }
}
