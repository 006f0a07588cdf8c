//! Batched forward prediction over instance sets.
//!
//! [`Tsip`] owns a forward-model backend and the sampling configuration for
//! building instance sets from observations. Planning code interacts with it
//! in two moves: `sync_state`/`get_dris` to turn the latest observation into
//! a fresh [`Dris`], and `next` to advance a set through a batch of candidate
//! actions. `next` is pure, so a solver can fan out many candidates from the
//! same parent set and the results depend only on its arguments.

use crate::context::{sample_contexts, Context, WidthPreset};
use crate::dris::{make_dris, Dris};
use crate::error::{Error, Result};
use crate::state::StateVector;
use crate::stepper::BackendKind;
use crate::task::{Action, TaskWorld};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How observations are expanded into instance sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrisSampling {
    /// Instances per set.
    pub m: usize,
    /// Log-uniform multiplier interval for the context parameters.
    pub width: WidthPreset,
    /// Std of the planar pose noise applied per instance, in meters.
    pub pose_noise_std: f64,
    /// Nominal physical parameters the multipliers act on.
    pub base: Context,
}

impl DrisSampling {
    pub fn validate(&self, path: &str) -> Result<()> {
        if self.m == 0 {
            return Err(Error::config(format!("{path}.m"), "must be at least 1"));
        }
        if !self.pose_noise_std.is_finite() || self.pose_noise_std < 0.0 {
            return Err(Error::config(
                format!("{path}.pose_noise_std"),
                format!("must be finite and nonnegative, got {}", self.pose_noise_std),
            ));
        }
        self.width.validate(&format!("{path}.width"))?;
        self.base.validate(&format!("{path}.base"))
    }
}

/// Stateful prediction frontend: holds the backend, world, sampling config,
/// the noise stream, and the most recently synced observation.
#[derive(Debug, Clone)]
pub struct Tsip {
    backend: BackendKind,
    world: TaskWorld,
    sampling: DrisSampling,
    rng: ChaCha8Rng,
    synced: Option<StateVector>,
}

impl Tsip {
    pub fn new(
        backend: BackendKind,
        world: TaskWorld,
        sampling: DrisSampling,
        seed: u64,
    ) -> Result<Self> {
        world.validate("world")?;
        sampling.validate("dris")?;
        Ok(Self {
            backend,
            world,
            sampling,
            rng: ChaCha8Rng::seed_from_u64(seed),
            synced: None,
        })
    }

    pub fn backend(&self) -> BackendKind {
        self.backend
    }

    pub fn world(&self) -> &TaskWorld {
        &self.world
    }

    pub fn sampling(&self) -> &DrisSampling {
        &self.sampling
    }

    /// Record the latest measurements. The object observation may be noisy
    /// or stale; the tool pose comes from the robot's own report and
    /// overwrites the observation's tool fields.
    pub fn sync_state(&mut self, object_obs: StateVector, tool_pose: [f64; 2]) -> Result<()> {
        let mut merged = object_obs;
        merged.rx = tool_pose[0];
        merged.ry = tool_pose[1];
        if !merged.is_finite() {
            return Err(Error::state("cannot sync a non-finite observation"));
        }
        self.synced = Some(merged);
        Ok(())
    }

    /// Expand the synced observation into a fresh instance set at local
    /// timestep 0. Each call draws new contexts and pose noise, so repeated
    /// calls at the same observation yield independent sets.
    pub fn get_dris(&mut self) -> Result<Dris> {
        let observed = self
            .synced
            .ok_or_else(|| Error::state("get_dris called before sync_state"))?;
        let contexts = sample_contexts(
            &self.sampling.base,
            self.sampling.width,
            self.sampling.m,
            &mut self.rng,
        );
        make_dris(&observed, contexts, self.sampling.pose_noise_std, &mut self.rng)
    }

    /// Advance `d` one step under each candidate action. Result `i`
    /// corresponds to `actions[i]`; instance order and contexts are
    /// preserved. Actions outside the bounds are an error, never clamped.
    pub fn next(&self, d: &Dris, actions: &[Action]) -> Result<Vec<Dris>> {
        for (i, a) in actions.iter().enumerate() {
            self.world.bounds.check(i, a)?;
        }
        actions
            .iter()
            .map(|a| {
                let instances = d
                    .instances()
                    .iter()
                    .map(|inst| crate::dris::Instance {
                        state: self.backend.step(&inst.state, a, &inst.context, &self.world),
                        context: inst.context,
                    })
                    .collect();
                Dris::new(d.timestep() + 1, instances)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{ActionBounds, Goal, TaskId};

    fn world() -> TaskWorld {
        TaskWorld {
            task: TaskId::PushToGoal,
            disc_radius: 0.06,
            plate_radius: 0.1,
            goal: Goal::Point {
                position: [0.5, 0.0],
                tolerance: 0.05,
            },
            dt: 0.1,
            gravity: 9.81,
            bounds: ActionBounds::default(),
        }
    }

    fn sampling(m: usize) -> DrisSampling {
        DrisSampling {
            m,
            width: WidthPreset::MEDIUM,
            pose_noise_std: 0.01,
            base: Context::default(),
        }
    }

    fn synced_tsip(seed: u64) -> Tsip {
        let mut t = Tsip::new(BackendKind::AnalyticPush, world(), sampling(8), seed).unwrap();
        let mut s = StateVector::zeros();
        s.x = 0.2;
        // A stale tool pose in the observation; the reported pose wins.
        s.rx = -1.0;
        s.ry = -1.0;
        t.sync_state(s, [0.05, 0.01]).unwrap();
        t
    }

    #[test]
    fn get_dris_requires_a_synced_observation() {
        let mut t = Tsip::new(BackendKind::AnalyticPush, world(), sampling(4), 1).unwrap();
        assert!(t.get_dris().is_err());
        t.sync_state(StateVector::zeros(), [0.0, 0.0]).unwrap();
        assert!(t.get_dris().is_ok());
    }

    #[test]
    fn get_dris_starts_at_step_zero_with_the_reported_tool_pose() {
        let mut t = synced_tsip(7);
        let d = t.get_dris().unwrap();
        assert_eq!(d.timestep(), 0);
        assert_eq!(d.len(), 8);
        for inst in d.instances() {
            assert_eq!(inst.state.rx, 0.05);
            assert_eq!(inst.state.ry, 0.01);
        }
    }

    #[test]
    fn same_seed_same_sets_fresh_draws_differ() {
        let mut a = synced_tsip(42);
        let mut b = synced_tsip(42);
        let d1 = a.get_dris().unwrap();
        assert_eq!(d1, b.get_dris().unwrap());
        let d2 = a.get_dris().unwrap();
        assert_ne!(d1, d2, "each call draws fresh contexts and noise");
    }

    #[test]
    fn next_preserves_contexts_and_order_and_increments_the_step() {
        let mut t = synced_tsip(11);
        let d = t.get_dris().unwrap();
        let actions = [Action::new(0.02, 0.0), Action::new(0.0, -0.01)];
        let out = t.next(&d, &actions).unwrap();
        assert_eq!(out.len(), 2);
        for next in &out {
            assert_eq!(next.timestep(), d.timestep() + 1);
            assert_eq!(next.len(), d.len());
            for (before, after) in d.instances().iter().zip(next.instances()) {
                assert_eq!(before.context, after.context);
            }
        }
        // The tool pose moves with the action in every instance.
        for inst in out[1].instances() {
            assert_eq!(inst.state.ry, 0.01 - 0.01);
        }
    }

    #[test]
    fn batched_prediction_matches_one_action_at_a_time() {
        let mut t = synced_tsip(13);
        let d = t.get_dris().unwrap();
        let actions = [
            Action::new(0.02, 0.0),
            Action::new(-0.015, 0.005),
            Action::ZERO,
        ];
        let batched = t.next(&d, &actions).unwrap();
        for (a, expect) in actions.iter().zip(&batched) {
            assert_eq!(&t.next(&d, &[*a]).unwrap()[0], expect);
        }
    }

    #[test]
    fn next_is_pure() {
        let mut t = synced_tsip(17);
        let d = t.get_dris().unwrap();
        let actions = [Action::new(0.01, 0.01)];
        assert_eq!(t.next(&d, &actions).unwrap(), t.next(&d, &actions).unwrap());
    }

    #[test]
    fn out_of_bounds_action_is_rejected_not_clamped() {
        let mut t = synced_tsip(19);
        let d = t.get_dris().unwrap();
        let actions = [Action::ZERO, Action::new(0.5, 0.0)];
        match t.next(&d, &actions) {
            Err(Error::ActionBounds { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected a bounds error, got {other:?}"),
        }
    }

    #[test]
    fn backend_swap_changes_the_motion_model_only() {
        let w = world();
        let s = sampling(1);
        let mut push = Tsip::new(BackendKind::AnalyticPush, w, s, 5).unwrap();
        let mut cv = Tsip::new(BackendKind::ConstVelocity, w, s, 5).unwrap();
        let mut obs = StateVector::zeros();
        obs.vx = 0.3;
        push.sync_state(obs, [-10.0, 0.0]).unwrap();
        cv.sync_state(obs, [-10.0, 0.0]).unwrap();
        let d_push = push.get_dris().unwrap();
        let d_cv = cv.get_dris().unwrap();
        assert_eq!(d_push, d_cv, "sampling is backend independent");
        let a = [Action::ZERO];
        // Tool far away: the push backend leaves the object still while the
        // constant-velocity backend advances it by v * dt.
        let after_push = &push.next(&d_push, &a).unwrap()[0];
        let after_cv = &cv.next(&d_cv, &a).unwrap()[0];
        assert_eq!(after_push.instances()[0].state.x, d_push.instances()[0].state.x);
        let expect = d_cv.instances()[0].state.x + 0.3 * w.dt;
        assert!((after_cv.instances()[0].state.x - expect).abs() < 1e-12);
    }
}
