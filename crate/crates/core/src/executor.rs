//! Ground-truth episode execution with perturbation injection.
//!
//! The executor owns the true world state, steps it with the same analytic
//! stepper the prediction frontend uses, and degrades what the planner gets
//! to see: additive Gaussian position noise, a fixed observation delay, and
//! a physics severity that scales the true context away from the defaults.
//! Success is latched per task as the episode advances.

use crate::context::Context;
use crate::error::{Error, Result};
use crate::seed::derive_rng;
use crate::state::StateVector;
use crate::stepper::BackendKind;
use crate::task::{Action, Goal, TaskId, TaskWorld};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const SEVERITY_MULT_FLOOR: f64 = 0.05;
pub const DEFAULT_GOAL_TOLERANCE: f64 = 0.03;
pub const FOLLOW_ERROR_LIMIT: f64 = 0.05;

/// How execution is degraded relative to the ideal closed loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    /// Std of additive planar observation noise, meters.
    #[serde(default)]
    pub obs_noise_std: f64,
    /// Observation staleness in executor steps.
    #[serde(default)]
    pub obs_delay_steps: u64,
    /// How far the true physics may deviate from defaults, in [0, 1].
    #[serde(default)]
    pub physics_severity: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            obs_noise_std: 0.0,
            obs_delay_steps: 0,
            physics_severity: 0.0,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self, path: &str) -> Result<()> {
        if !self.obs_noise_std.is_finite() || self.obs_noise_std < 0.0 {
            return Err(Error::config(
                format!("{path}.obs_noise_std"),
                format!("must be finite and nonnegative, got {}", self.obs_noise_std),
            ));
        }
        if !self.physics_severity.is_finite()
            || !(0.0..=1.0).contains(&self.physics_severity)
        {
            return Err(Error::config(
                format!("{path}.physics_severity"),
                format!("must lie in [0, 1], got {}", self.physics_severity),
            ));
        }
        Ok(())
    }
}

/// Uniform box around a center point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnBox {
    pub center: [f64; 2],
    pub half: [f64; 2],
}

impl SpawnBox {
    fn draw(&self, rng: &mut ChaCha8Rng) -> [f64; 2] {
        [
            uniform_around(rng, self.center[0], self.half[0]),
            uniform_around(rng, self.center[1], self.half[1]),
        ]
    }

    fn validate(&self, path: &str) -> Result<()> {
        let ok = self.center.iter().all(|v| v.is_finite())
            && self.half.iter().all(|v| v.is_finite() && *v >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::config(path, "center must be finite, half widths nonnegative"))
        }
    }
}

/// Initial-condition ranges for an episode. Ball fields only apply to the
/// catching task; the object box doubles as the ball's planar spawn there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnConfig {
    pub object: SpawnBox,
    pub tool: SpawnBox,
    /// Uniform heading half range in radians.
    pub heading_half: f64,
    /// Ball release altitude range [lo, hi], meters.
    pub ball_z: [f64; 2],
    /// Uniform half range of the ball's planar launch velocity, m/s.
    pub ball_vxy_half: f64,
    /// Ball vertical launch velocity range [lo, hi], m/s.
    pub ball_vz: [f64; 2],
}

impl SpawnConfig {
    pub fn default_for(task: TaskId, world: &TaskWorld) -> Self {
        let object_center = match (&task, &world.goal) {
            (TaskId::PushFollowCircle, Goal::Circle { .. }) => world.goal.reference_point(0),
            _ => [0.0, 0.0],
        };
        Self {
            object: SpawnBox {
                center: object_center,
                half: match task {
                    TaskId::PushToGoal => [0.04, 0.04],
                    TaskId::PushFollowCircle => [0.01, 0.01],
                    TaskId::CatchBall => [0.18, 0.18],
                },
            },
            tool: SpawnBox {
                center: match task {
                    TaskId::PushToGoal => [-0.15, 0.0],
                    TaskId::PushFollowCircle => {
                        [object_center[0] - 0.15, object_center[1]]
                    }
                    TaskId::CatchBall => [0.0, 0.0],
                },
                half: [0.02, 0.02],
            },
            heading_half: std::f64::consts::PI,
            ball_z: [0.6, 0.9],
            ball_vxy_half: 0.25,
            ball_vz: [-0.3, 0.3],
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        self.object.validate(&format!("{path}.object"))?;
        self.tool.validate(&format!("{path}.tool"))?;
        if !self.heading_half.is_finite() || self.heading_half < 0.0 {
            return Err(Error::config(
                format!("{path}.heading_half"),
                "must be finite and nonnegative",
            ));
        }
        for (name, range) in [("ball_z", self.ball_z), ("ball_vz", self.ball_vz)] {
            if !range.iter().all(|v| v.is_finite()) || range[0] > range[1] {
                return Err(Error::config(
                    format!("{path}.{name}"),
                    "range must be finite with lo <= hi",
                ));
            }
        }
        if !self.ball_vxy_half.is_finite() || self.ball_vxy_half < 0.0 {
            return Err(Error::config(
                format!("{path}.ball_vxy_half"),
                "must be finite and nonnegative",
            ));
        }
        Ok(())
    }
}

fn uniform_around(rng: &mut ChaCha8Rng, center: f64, half: f64) -> f64 {
    if half == 0.0 {
        return center;
    }
    rng.gen_range(center - half..=center + half)
}

fn uniform_range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    rng.gen_range(lo..=hi)
}

/// Scale a context away from its defaults. Each parameter gets an
/// independent uniform multiplier from [1 − 0.8 s, 1 + 2 s], clamped below
/// at 0.05 so parameters stay positive. Severity 0 keeps the defaults
/// bit-exactly.
pub fn perturb_context(base: &Context, severity: f64, rng: &mut ChaCha8Rng) -> Context {
    let lo = (1.0 - 0.8 * severity).max(SEVERITY_MULT_FLOOR);
    let hi = 1.0 + 2.0 * severity;
    let mut mult = || uniform_range(rng, lo, hi).max(SEVERITY_MULT_FLOOR);
    Context {
        mass_kg: base.mass_kg * mult(),
        friction_coeff: base.friction_coeff * mult(),
        geometry_scale: base.geometry_scale * mult(),
        drag_coeff: base.drag_coeff * mult(),
    }
}

/// How an episode ended, if it has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    Failure,
}

/// Ground-truth world for one episode.
#[derive(Debug, Clone)]
pub struct Executor {
    world: TaskWorld,
    backend: BackendKind,
    perturbation: PerturbationConfig,
    true_context: Context,
    true_state: StateVector,
    /// True state after each step, index 0 = initial state.
    history: Vec<StateVector>,
    t: u64,
    horizon: u64,
    obs_rng: ChaCha8Rng,
    outcome: Option<Outcome>,
    /// Accumulated tracking error for the circle-following task.
    follow_error_sum: f64,
}

impl Executor {
    /// Start an episode. The seed feeds three independent streams: the true
    /// context draw, the spawn draw, and observation noise.
    pub fn new(
        world: TaskWorld,
        perturbation: PerturbationConfig,
        spawn: &SpawnConfig,
        base_context: &Context,
        horizon: u64,
        seed: u64,
    ) -> Result<Self> {
        world.validate("world")?;
        perturbation.validate("perturbation")?;
        spawn.validate("spawn")?;
        base_context.validate("context")?;
        if horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }

        let mut context_rng = derive_rng(seed, "context", 0);
        let true_context =
            perturb_context(base_context, perturbation.physics_severity, &mut context_rng);

        let mut spawn_rng = derive_rng(seed, "spawn", 0);
        let mut s = StateVector::zeros();
        let object = spawn.object.draw(&mut spawn_rng);
        s.x = object[0];
        s.y = object[1];
        s.heading = uniform_around(&mut spawn_rng, 0.0, spawn.heading_half);
        if world.task == TaskId::CatchBall {
            s.z = uniform_range(&mut spawn_rng, spawn.ball_z[0], spawn.ball_z[1]);
            s.vx = uniform_around(&mut spawn_rng, 0.0, spawn.ball_vxy_half);
            s.vy = uniform_around(&mut spawn_rng, 0.0, spawn.ball_vxy_half);
            s.vz = uniform_range(&mut spawn_rng, spawn.ball_vz[0], spawn.ball_vz[1]);
        }
        let tool = spawn.tool.draw(&mut spawn_rng);
        s.rx = tool[0];
        s.ry = tool[1];

        let backend = match world.task {
            TaskId::PushToGoal | TaskId::PushFollowCircle => BackendKind::AnalyticPush,
            TaskId::CatchBall => BackendKind::AnalyticBallistic,
        };

        Ok(Self {
            world,
            backend,
            perturbation,
            true_context,
            true_state: s,
            history: vec![s],
            t: 0,
            horizon,
            obs_rng: derive_rng(seed, "obs", 0),
            outcome: None,
            follow_error_sum: 0.0,
        })
    }

    pub fn world(&self) -> &TaskWorld {
        &self.world
    }

    pub fn true_context(&self) -> &Context {
        &self.true_context
    }

    pub fn true_state(&self) -> &StateVector {
        &self.true_state
    }

    pub fn timestep(&self) -> u64 {
        self.t
    }

    /// True states so far, indexed by timestep; entry 0 is the spawn state.
    pub fn history(&self) -> &[StateVector] {
        &self.history
    }

    /// The tool pose the robot reports about itself: exact and current.
    pub fn tool_pose(&self) -> [f64; 2] {
        [self.true_state.rx, self.true_state.ry]
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome.is_some() || self.t >= self.horizon
    }

    /// Mean tracking error so far, for the circle-following task.
    pub fn mean_follow_error(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.follow_error_sum / self.t as f64
        }
    }

    /// Execute a chunk of actions against the true world. Actions outside
    /// the bounds are an error. Terminal latching happens per step, but the
    /// whole chunk is always carried out.
    pub fn execute(&mut self, chunk: &[Action]) -> Result<()> {
        if chunk.is_empty() {
            return Err(Error::state("cannot execute an empty chunk"));
        }
        if self.is_terminal() {
            return Err(Error::state("episode already terminated"));
        }
        for (i, a) in chunk.iter().enumerate() {
            self.world.bounds.check(i, a)?;
        }
        for a in chunk {
            let before = self.true_state;
            self.true_state = self
                .backend
                .step(&before, a, &self.true_context, &self.world);
            self.t += 1;
            self.history.push(self.true_state);
            self.latch(&before);
        }
        Ok(())
    }

    /// Update terminal conditions after one true step from `before`.
    fn latch(&mut self, before: &StateVector) {
        if self.outcome.is_some() {
            return;
        }
        match (self.world.task, &self.world.goal) {
            (TaskId::PushToGoal, Goal::Point { position, tolerance }) => {
                let (dx, dy) = (self.true_state.x - position[0], self.true_state.y - position[1]);
                if (dx * dx + dy * dy).sqrt() <= *tolerance {
                    self.outcome = Some(Outcome::Success);
                } else if self.t >= self.horizon {
                    self.outcome = Some(Outcome::Failure);
                }
            }
            (TaskId::PushFollowCircle, Goal::Circle { .. }) => {
                let r = self.world.goal.reference_point(self.t);
                let (dx, dy) = (self.true_state.x - r[0], self.true_state.y - r[1]);
                self.follow_error_sum += (dx * dx + dy * dy).sqrt();
                if self.t >= self.horizon {
                    self.outcome = Some(if self.mean_follow_error() < FOLLOW_ERROR_LIMIT {
                        Outcome::Success
                    } else {
                        Outcome::Failure
                    });
                }
            }
            (TaskId::CatchBall, Goal::Plate) => {
                if before.z > 0.0 && self.true_state.z <= 0.0 {
                    // The ball crossed the plate plane during this step;
                    // interpolate the crossing point along the step.
                    let f = before.z / (before.z - self.true_state.z);
                    let bx = before.x + f * (self.true_state.x - before.x);
                    let by = before.y + f * (self.true_state.y - before.y);
                    let px = before.rx + f * (self.true_state.rx - before.rx);
                    let py = before.ry + f * (self.true_state.ry - before.ry);
                    let (dx, dy) = (bx - px, by - py);
                    self.outcome = Some(if (dx * dx + dy * dy).sqrt() <= self.world.plate_radius {
                        Outcome::Success
                    } else {
                        Outcome::Failure
                    });
                } else if self.t >= self.horizon {
                    self.outcome = Some(Outcome::Failure);
                }
            }
            _ => unreachable!("world validation pairs tasks with goals"),
        }
    }

    /// Observe the object: the true state from `obs_delay_steps` ago with
    /// fresh planar position noise. Each call is a new measurement and
    /// redraws the noise.
    pub fn get_obs(&mut self) -> StateVector {
        let idx = self.t.saturating_sub(self.perturbation.obs_delay_steps) as usize;
        let mut obs = self.history[idx];
        let nx: f64 = StandardNormal.sample(&mut self.obs_rng);
        let ny: f64 = StandardNormal.sample(&mut self.obs_rng);
        obs.x += self.perturbation.obs_noise_std * nx;
        obs.y += self.perturbation.obs_noise_std * ny;
        obs
    }

    /// Success as latched so far. For the circle-following task this is
    /// only decided once the horizon is reached.
    pub fn success(&self) -> bool {
        self.outcome == Some(Outcome::Success)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::ActionBounds;
    use approx::assert_relative_eq;

    fn push_world() -> TaskWorld {
        TaskWorld {
            task: TaskId::PushToGoal,
            disc_radius: 0.06,
            plate_radius: 0.1,
            goal: Goal::Point {
                position: [0.45, 0.0],
                tolerance: DEFAULT_GOAL_TOLERANCE,
            },
            dt: 0.02,
            gravity: 9.81,
            bounds: ActionBounds::default(),
        }
    }

    fn catch_world() -> TaskWorld {
        TaskWorld {
            task: TaskId::CatchBall,
            disc_radius: 0.06,
            plate_radius: 0.1,
            goal: Goal::Plate,
            dt: 0.02,
            gravity: 9.81,
            bounds: ActionBounds::default(),
        }
    }

    fn executor(world: TaskWorld, p: PerturbationConfig, seed: u64) -> Executor {
        let spawn = SpawnConfig::default_for(world.task, &world);
        Executor::new(world, p, &spawn, &Context::default(), 100, seed).unwrap()
    }

    #[test]
    fn severity_zero_keeps_the_default_context_bitwise() {
        let e = executor(push_world(), PerturbationConfig::default(), 3);
        assert_eq!(*e.true_context(), Context::default());
    }

    #[test]
    fn severity_multipliers_stay_inside_the_law() {
        let base = Context::default();
        let mut rng = derive_rng(9, "sev", 0);
        for _ in 0..10_000 {
            let c = perturb_context(&base, 0.4, &mut rng);
            for (v, b) in [
                (c.mass_kg, base.mass_kg),
                (c.friction_coeff, base.friction_coeff),
                (c.geometry_scale, base.geometry_scale),
                (c.drag_coeff, base.drag_coeff),
            ] {
                let m = v / b;
                assert!((0.68..=1.8).contains(&m), "multiplier {m} escaped");
            }
        }
    }

    #[test]
    fn zero_noise_zero_delay_observation_is_the_true_state() {
        let mut e = executor(push_world(), PerturbationConfig::default(), 4);
        assert_eq!(e.get_obs(), *e.true_state());
        e.execute(&[Action::new(0.01, 0.0)]).unwrap();
        assert_eq!(e.get_obs(), *e.true_state());
    }

    #[test]
    fn delayed_observation_is_the_true_state_from_k_steps_ago() {
        let p = PerturbationConfig {
            obs_delay_steps: 3,
            ..Default::default()
        };
        let mut e = executor(push_world(), p, 5);
        let mut trace = vec![*e.true_state()];
        for i in 0..6 {
            e.execute(&[Action::new(0.002 * (i as f64 + 1.0), 0.001)]).unwrap();
            trace.push(*e.true_state());
        }
        // Before enough steps have elapsed, the initial state is observed.
        assert_eq!(e.get_obs(), trace[3]);
        let p2 = PerturbationConfig {
            obs_delay_steps: 10,
            ..Default::default()
        };
        let mut e2 = executor(push_world(), p2, 5);
        e2.execute(&[Action::ZERO]).unwrap();
        assert_eq!(e2.get_obs(), trace[0]);
    }

    #[test]
    fn observation_noise_has_the_configured_std() {
        let p = PerturbationConfig {
            obs_noise_std: 0.04,
            ..Default::default()
        };
        let mut e = executor(push_world(), p, 6);
        let truth = *e.true_state();
        let n = 10_000;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let o = e.get_obs();
            sum_sq += (o.x - truth.x).powi(2) + (o.y - truth.y).powi(2);
        }
        let std = (sum_sq / (2.0 * n as f64)).sqrt();
        assert!((std - 0.04).abs() < 0.04 * 0.05, "empirical std {std}");
    }

    #[test]
    fn repeated_observations_redraw_the_noise() {
        let p = PerturbationConfig {
            obs_noise_std: 0.01,
            ..Default::default()
        };
        let mut e = executor(push_world(), p, 7);
        assert_ne!(e.get_obs(), e.get_obs());
    }

    #[test]
    fn same_seed_same_episode() {
        let p = PerturbationConfig {
            obs_noise_std: 0.02,
            obs_delay_steps: 1,
            physics_severity: 0.5,
        };
        let mut a = executor(push_world(), p, 8);
        let mut b = executor(push_world(), p, 8);
        assert_eq!(a.true_context(), b.true_context());
        assert_eq!(a.true_state(), b.true_state());
        for _ in 0..5 {
            a.execute(&[Action::new(0.01, -0.004)]).unwrap();
            b.execute(&[Action::new(0.01, -0.004)]).unwrap();
            assert_eq!(a.get_obs(), b.get_obs());
        }
        assert_eq!(a.true_state(), b.true_state());
    }

    #[test]
    fn chunk_execution_advances_the_clock_once_per_action() {
        let mut e = executor(push_world(), PerturbationConfig::default(), 10);
        e.execute(&[Action::ZERO; 8]).unwrap();
        assert_eq!(e.timestep(), 8);
    }

    #[test]
    fn out_of_bounds_action_in_a_chunk_is_rejected() {
        let mut e = executor(push_world(), PerturbationConfig::default(), 11);
        let err = e.execute(&[Action::ZERO, Action::new(1.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::ActionBounds { index: 1, .. }));
    }

    #[test]
    fn push_success_latches_when_the_object_reaches_the_goal() {
        let mut world = push_world();
        world.goal = Goal::Point {
            position: [0.0, 0.0],
            tolerance: 0.5,
        };
        let mut e = executor(world, PerturbationConfig::default(), 12);
        assert!(!e.success(), "success is only judged after a step");
        e.execute(&[Action::ZERO]).unwrap();
        assert!(e.success());
        assert!(e.is_terminal());
        assert!(e.execute(&[Action::ZERO]).is_err());
    }

    #[test]
    fn ball_landing_on_the_plate_rim_counts() {
        let world = catch_world();
        let spawn = SpawnConfig {
            object: SpawnBox {
                center: [0.1, 0.0],
                half: [0.0, 0.0],
            },
            tool: SpawnBox {
                center: [0.0, 0.0],
                half: [0.0, 0.0],
            },
            heading_half: 0.0,
            ball_z: [0.05, 0.05],
            ball_vxy_half: 0.0,
            ball_vz: [0.0, 0.0],
        };
        let mut e = Executor::new(
            world,
            PerturbationConfig::default(),
            &spawn,
            &Context {
                drag_coeff: 0.0,
                ..Context::default()
            },
            100,
            13,
        )
        .unwrap();
        // Ball drops straight from 5 cm onto x = 0.1, exactly the rim.
        while e.outcome().is_none() {
            e.execute(&[Action::ZERO]).unwrap();
        }
        assert_eq!(e.outcome(), Some(Outcome::Success));
    }

    #[test]
    fn ball_landing_past_the_rim_fails() {
        let world = catch_world();
        let spawn = SpawnConfig {
            object: SpawnBox {
                center: [0.11, 0.0],
                half: [0.0, 0.0],
            },
            tool: SpawnBox {
                center: [0.0, 0.0],
                half: [0.0, 0.0],
            },
            heading_half: 0.0,
            ball_z: [0.05, 0.05],
            ball_vxy_half: 0.0,
            ball_vz: [0.0, 0.0],
        };
        let mut e = Executor::new(
            world,
            PerturbationConfig::default(),
            &spawn,
            &Context {
                drag_coeff: 0.0,
                ..Context::default()
            },
            100,
            14,
        )
        .unwrap();
        while e.outcome().is_none() {
            e.execute(&[Action::ZERO]).unwrap();
        }
        assert_eq!(e.outcome(), Some(Outcome::Failure));
    }

    #[test]
    fn follow_task_decides_success_from_the_mean_tracking_error() {
        let world = TaskWorld {
            task: TaskId::PushFollowCircle,
            disc_radius: 0.06,
            plate_radius: 0.1,
            goal: Goal::Circle {
                center: [0.0, 0.0],
                radius: 0.2,
                period_steps: 1_000_000,
                phase: 0.0,
            },
            dt: 0.02,
            gravity: 9.81,
            bounds: ActionBounds::default(),
        };
        // Object pinned at the (nearly static) reference: success.
        let spawn = SpawnConfig {
            object: SpawnBox {
                center: [0.2, 0.0],
                half: [0.0, 0.0],
            },
            tool: SpawnBox {
                center: [-0.5, 0.0],
                half: [0.0, 0.0],
            },
            heading_half: 0.0,
            ball_z: [0.0, 0.0],
            ball_vxy_half: 0.0,
            ball_vz: [0.0, 0.0],
        };
        let mut e = Executor::new(
            world,
            PerturbationConfig::default(),
            &spawn,
            &Context::default(),
            20,
            15,
        )
        .unwrap();
        for _ in 0..20 {
            e.execute(&[Action::ZERO]).unwrap();
        }
        assert_eq!(e.outcome(), Some(Outcome::Success));
        assert!(e.mean_follow_error() < 1e-4, "reference creep only");
    }

    #[test]
    fn executor_steps_match_the_shared_stepper() {
        let mut e = executor(push_world(), PerturbationConfig::default(), 16);
        let s0 = *e.true_state();
        let a = Action::new(0.015, 0.002);
        let expect = BackendKind::AnalyticPush.step(&s0, &a, e.true_context(), e.world());
        e.execute(&[a]).unwrap();
        assert_eq!(*e.true_state(), expect);
    }

    #[test]
    fn interpolated_landing_point_is_between_the_bracketing_states() {
        let world = catch_world();
        let spawn = SpawnConfig {
            object: SpawnBox {
                center: [0.0, 0.0],
                half: [0.0, 0.0],
            },
            tool: SpawnBox {
                center: [0.0, 0.0],
                half: [0.0, 0.0],
            },
            heading_half: 0.0,
            ball_z: [0.3, 0.3],
            ball_vxy_half: 0.0,
            ball_vz: [0.0, 0.0],
        };
        let mut e = Executor::new(
            world,
            PerturbationConfig::default(),
            &spawn,
            &Context::default(),
            100,
            17,
        )
        .unwrap();
        let mut before_z = e.true_state().z;
        while e.outcome().is_none() {
            before_z = e.true_state().z;
            e.execute(&[Action::ZERO]).unwrap();
        }
        assert!(before_z > 0.0 && e.true_state().z <= 0.0);
        // Free fall from 30 cm: sqrt(2h/g) ≈ 0.247 s ≈ 12.4 steps of 20 ms.
        assert_relative_eq!(e.timestep() as f64, 13.0, epsilon = 1.0);
    }
}
