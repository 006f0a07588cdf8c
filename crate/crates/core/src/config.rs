//! Run configuration: the root schema of a config file, validation with
//! field-path errors, per-task defaults, and the config hash embedded in
//! every output file.

use crate::cage::CageConfig;
use crate::context::{Context, WidthPreset};
use crate::error::{Error, Result};
use crate::executor::{PerturbationConfig, SpawnConfig, DEFAULT_GOAL_TOLERANCE};
use crate::solver::SolverConfig;
use crate::stepper::BackendKind;
use crate::task::{ActionBounds, Goal, TaskId, TaskWorld};
use crate::tsip::DrisSampling;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const CONFIG_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Replan between executed chunks from fresh observations.
    Online,
    /// Plan the whole horizon through the prediction model, then replay.
    PlanThenExecute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Noise,
    Delay,
    Severity,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Noise => "noise",
            SweepAxis::Delay => "delay",
            SweepAxis::Severity => "severity",
        }
    }
}

/// One perturbation axis swept over a grid, the other two held at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
}

fn default_runs() -> usize {
    10
}

fn default_episodes() -> usize {
    100
}

impl SweepSpec {
    pub fn default_for(axis: SweepAxis) -> Self {
        Self {
            axis,
            grid: match axis {
                SweepAxis::Noise => vec![0.0, 0.02, 0.04, 0.08],
                SweepAxis::Delay => vec![0.0, 1.0, 2.0, 4.0],
                SweepAxis::Severity => vec![0.0, 0.2, 0.4, 0.8],
            },
            runs: default_runs(),
            episodes: default_episodes(),
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::config(format!("{path}.grid"), "must be nonempty"));
        }
        for w in self.grid.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::config(
                    format!("{path}.grid"),
                    format!("values must strictly increase, got {} then {}", w[0], w[1]),
                ));
            }
        }
        for v in &self.grid {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::config(
                    format!("{path}.grid"),
                    format!("values must be finite and nonnegative, got {v}"),
                ));
            }
            if self.axis == SweepAxis::Delay && v.fract() != 0.0 {
                return Err(Error::config(
                    format!("{path}.grid"),
                    format!("delay values must be whole steps, got {v}"),
                ));
            }
            if self.axis == SweepAxis::Severity && *v > 1.0 {
                return Err(Error::config(
                    format!("{path}.grid"),
                    format!("severity values must lie in [0, 1], got {v}"),
                ));
            }
        }
        if self.runs == 0 || self.episodes == 0 {
            return Err(Error::config(path, "runs and episodes must be at least 1"));
        }
        Ok(())
    }

    /// The config for one grid point: the swept axis set, the others zero.
    pub fn apply(&self, config: &EnvConfig, value: f64) -> EnvConfig {
        let mut out = config.clone();
        out.perturbation = PerturbationConfig {
            obs_noise_std: 0.0,
            obs_delay_steps: 0,
            physics_severity: 0.0,
        };
        match self.axis {
            SweepAxis::Noise => out.perturbation.obs_noise_std = value,
            SweepAxis::Delay => out.perturbation.obs_delay_steps = value as u64,
            SweepAxis::Severity => out.perturbation.physics_severity = value,
        }
        out
    }
}

/// Root of a run config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub config_version: u32,
    pub seed: u64,
    pub mode: Mode,
    pub horizon: u64,
    pub chunk: usize,
    pub world: TaskWorld,
    pub backend: BackendKind,
    pub dris: DrisSampling,
    pub solver: SolverConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub cage: Option<CageConfig>,
    pub spawn: SpawnConfig,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

impl EnvConfig {
    pub fn task(&self) -> TaskId {
        self.world.task
    }

    /// A complete runnable config for one task, using the benchmark
    /// defaults everywhere.
    pub fn default_for(task: TaskId) -> Self {
        let world = default_world(task);
        let spawn = SpawnConfig::default_for(task, &world);
        Self {
            config_version: CONFIG_VERSION,
            seed: 42,
            mode: Mode::Online,
            horizon: 100,
            chunk: 8,
            world,
            backend: match task {
                TaskId::PushToGoal | TaskId::PushFollowCircle => BackendKind::AnalyticPush,
                TaskId::CatchBall => BackendKind::AnalyticBallistic,
            },
            dris: DrisSampling {
                m: 8,
                width: WidthPreset::MEDIUM,
                pose_noise_std: 0.01,
                base: Context::default(),
            },
            solver: SolverConfig::default_for(task),
            perturbation: PerturbationConfig::default(),
            cage: default_cage(task, &world, &spawn),
            spawn,
            sweep: None,
        }
    }

    /// The comparison method: one candidate, no cage. Everything else,
    /// including seeds, stays identical.
    pub fn baseline_variant(&self) -> Self {
        let mut out = self.clone();
        out.solver.n = 1;
        out.cage = None;
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.config_version != CONFIG_VERSION {
            return Err(Error::config(
                "config_version",
                format!("expected {CONFIG_VERSION}, got {}", self.config_version),
            ));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if self.chunk == 0 {
            return Err(Error::config("chunk", "must be at least 1"));
        }
        self.world.validate("world")?;
        self.dris.validate("dris")?;
        self.solver
            .validate(self.world.task, &self.world.bounds, "solver")?;
        self.perturbation.validate("perturbation")?;
        self.spawn.validate("spawn")?;
        if let Some(cage) = &self.cage {
            cage.build()?;
        }
        if let Some(sweep) = &self.sweep {
            sweep.validate("sweep")?;
        }
        Ok(())
    }

    /// Parse and validate a config file. Parse errors carry the file
    /// position; validation errors carry the field path.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: EnvConfig = serde_json::from_str(&text).map_err(|e| {
            Error::config(
                format!("{}:{}:{}", path.display(), e.line(), e.column()),
                e.to_string(),
            )
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Hex digest of the canonical serialized config, for embedding in
    /// output files.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(16);
        for byte in &digest[..8] {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

fn default_world(task: TaskId) -> TaskWorld {
    TaskWorld {
        task,
        disc_radius: 0.06,
        plate_radius: 0.1,
        goal: match task {
            TaskId::PushToGoal => Goal::Point {
                position: [0.45, 0.0],
                tolerance: DEFAULT_GOAL_TOLERANCE,
            },
            TaskId::PushFollowCircle => Goal::Circle {
                center: [0.0, 0.25],
                radius: 0.15,
                period_steps: 400,
                phase: 0.0,
            },
            TaskId::CatchBall => Goal::Plate,
        },
        dt: 0.02,
        gravity: 9.81,
        bounds: ActionBounds::default(),
    }
}

/// The default cage for a task: a tube along the nominal object route for
/// the push tasks, nothing for catching (the ball's route is not known
/// until the episode starts).
fn default_cage(task: TaskId, world: &TaskWorld, spawn: &SpawnConfig) -> Option<CageConfig> {
    use crate::cage::Schedule;
    match (task, &world.goal) {
        (TaskId::PushToGoal, Goal::Point { position, .. }) => Some(CageConfig::Trajectory {
            waypoints: vec![
                [spawn.object.center[0], spawn.object.center[1], 0.0],
                [position[0], position[1], 0.0],
            ],
            tube_radius: 0.16,
            schedule: Schedule::Piecewise {
                points: vec![(0, 0.0), (20, 0.05), (90, 1.0)],
            },
            alpha: 0.25,
        }),
        (TaskId::PushFollowCircle, Goal::Circle { .. }) => {
            // Polyline along the arc the reference covers in one horizon.
            let waypoints: Vec<[f64; 3]> = (0..=16)
                .map(|i| {
                    let r = world.goal.reference_point(i * 100 / 16);
                    [r[0], r[1], 0.0]
                })
                .collect();
            Some(CageConfig::Trajectory {
                waypoints,
                tube_radius: 0.14,
                schedule: Schedule::Uniform { total_steps: 100 },
                alpha: 0.25,
            })
        }
        _ => None,
    }
}
