//! Episode orchestration: wires the executor, the prediction model, the
//! cage, and the solver into the full control loop.
//!
//! The loop alternates planning and execution in chunks. At a chunk
//! boundary the executor is observed, the observation is expanded into a
//! fresh instance set, and the next chunk is planned step by step, each
//! step acting on the set propagated from the previous step's selected
//! action. No new measurements are taken inside a chunk.
//!
//! With one candidate and no cage there is nothing to select between, so
//! the loop degenerates to the scripted policy run closed-loop on fresh
//! observations every step.

use crate::cage::Cage;
use crate::config::{EnvConfig, Mode, TOOL_VERSION};
use crate::dris::{DistStats, Dris};
use crate::error::{Error, Result};
use crate::executor::{Executor, Outcome};
use crate::record::{CandidateEntry, RecordLine, StepEntry};
use crate::seed::derive_seed;
use crate::solver::{PhaseTiming, SolveStep, Solver, MAX_SCORE_WINDOW};
use crate::state::StateVector;
use crate::task::Action;
use crate::tsip::Tsip;
use std::time::Instant;

/// How much of the configured observation noise the belief's pose spread
/// inherits.
const BELIEF_NOISE_FRACTION: f64 = 0.75;

/// What came back from executing one action through [`Env::step`].
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    /// Timestep after the action, equal to the number of executed steps.
    pub t: u64,
    pub true_state: StateVector,
    pub outcome: Option<Outcome>,
}

/// Per-step metadata of a whole-horizon plan.
#[derive(Debug, Clone)]
pub struct PlanStep {
    pub belief: DistStats,
    pub predicted: Option<DistStats>,
    pub cage_cost: Option<f64>,
    pub valid: bool,
}

/// A whole-horizon plan produced without touching the executor.
#[derive(Debug, Clone)]
pub struct Plan {
    pub actions: Vec<Action>,
    pub steps: Vec<PlanStep>,
    pub infeasible_steps: u64,
    pub timings: Vec<PhaseTiming>,
}

/// Wrap-up of an executed episode.
#[derive(Debug, Clone)]
pub struct EpisodeSummary {
    /// Executed steps.
    pub steps: u64,
    pub outcome: Option<Outcome>,
    pub success: bool,
    /// Mean cage cost of the executed actions, when a cage was configured.
    pub mean_cage_cost: Option<f64>,
    /// Steps where no candidate kept the predicted set inside the cage.
    pub infeasible_steps: u64,
    /// One entry per planning step, in order. Wall-clock data stays here
    /// and never enters records.
    pub timings: Vec<PhaseTiming>,
}

/// Result of [`Env::dream`], depending on the configured mode.
#[derive(Debug, Clone)]
pub enum DreamResult {
    /// Online mode ran plan and execution interleaved to the end.
    Executed(EpisodeSummary),
    /// Plan-then-execute mode produced a plan and left the executor
    /// untouched; pass it to [`Env::execute_plan`].
    Planned(Plan),
}

/// One episode's worth of wired-up components.
pub struct Env {
    config: EnvConfig,
    config_hash: String,
    cage: Option<Cage>,
    executor: Executor,
    tsip: Tsip,
    solver: Solver,
    belief: Dris,
    /// Observation behind the current belief, until a step records it.
    pending_obs: Option<StateVector>,
    /// Seconds spent in observe-and-expand since the last planning step.
    pending_sync: f64,
    log_candidates: bool,
    record: Vec<RecordLine>,
    outcome_recorded: bool,
    cage_cost_sum: f64,
    cage_cost_count: u64,
    infeasible_steps: u64,
}

fn build_components(config: &EnvConfig, episode_seed: u64) -> Result<(Executor, Tsip, Solver)> {
    let executor = Executor::new(
        config.world,
        config.perturbation,
        &config.spawn,
        &config.dris.base,
        config.horizon,
        derive_seed(episode_seed, "executor", 0),
    )?;
    // The belief's pose spread tracks the sensor it reads from: a noisier
    // observation channel widens the instance cloud, and the configured
    // pose_noise_std acts as the floor for a clean channel. The cloud sits
    // a shade inside the raw sensor noise; repeated re-observation keeps
    // the residual error of the running estimate below a single reading.
    let mut sampling = config.dris;
    sampling.pose_noise_std = sampling
        .pose_noise_std
        .max(BELIEF_NOISE_FRACTION * config.perturbation.obs_noise_std);
    let tsip = Tsip::new(
        config.backend,
        config.world,
        sampling,
        derive_seed(episode_seed, "tsip", 0),
    )?;
    let solver = Solver::new(
        config.solver.clone(),
        config.task(),
        &config.world.bounds,
        derive_seed(episode_seed, "solver", 0),
    )?;
    Ok((executor, tsip, solver))
}

impl Env {
    /// Validate the config and start an episode under `episode_seed`. The
    /// seed splits into independent executor, model, and solver streams.
    pub fn new(config: EnvConfig, episode_seed: u64) -> Result<Self> {
        config.validate()?;
        let cage = match &config.cage {
            Some(spec) => Some(spec.build()?),
            None => None,
        };
        let config_hash = config.hash();
        let (mut executor, mut tsip, solver) = build_components(&config, episode_seed)?;

        let t0 = Instant::now();
        let obs = executor.get_obs();
        tsip.sync_state(obs, executor.tool_pose())?;
        let belief = tsip.get_dris()?;
        let pending_sync = t0.elapsed().as_secs_f64();

        let record = vec![RecordLine::Header {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: config_hash.clone(),
            episode_seed,
            config: config.clone(),
        }];

        Ok(Self {
            config,
            config_hash,
            cage,
            executor,
            tsip,
            solver,
            belief,
            pending_obs: Some(obs),
            pending_sync,
            log_candidates: false,
            record,
            outcome_recorded: false,
            cage_cost_sum: 0.0,
            cage_cost_count: 0,
            infeasible_steps: 0,
        })
    }

    /// Drop all episode state and start over under a new seed.
    pub fn reset(&mut self, episode_seed: u64) -> Result<()> {
        let (mut executor, mut tsip, solver) = build_components(&self.config, episode_seed)?;
        let t0 = Instant::now();
        let obs = executor.get_obs();
        tsip.sync_state(obs, executor.tool_pose())?;
        self.belief = tsip.get_dris()?;
        self.pending_sync = t0.elapsed().as_secs_f64();
        self.pending_obs = Some(obs);
        self.executor = executor;
        self.tsip = tsip;
        self.solver = solver;
        self.record = vec![RecordLine::Header {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: self.config_hash.clone(),
            episode_seed,
            config: self.config.clone(),
        }];
        self.outcome_recorded = false;
        self.cage_cost_sum = 0.0;
        self.cage_cost_count = 0;
        self.infeasible_steps = 0;
        Ok(())
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn executor(&self) -> &Executor {
        &self.executor
    }

    pub fn belief(&self) -> &Dris {
        &self.belief
    }

    pub fn set_log_candidates(&mut self, on: bool) {
        self.log_candidates = on;
    }

    pub fn record_lines(&self) -> &[RecordLine] {
        &self.record
    }

    pub fn take_record(&mut self) -> Vec<RecordLine> {
        std::mem::take(&mut self.record)
    }

    /// Observe the executor and expand a fresh belief from it.
    fn observe(&mut self) -> Result<()> {
        let t0 = Instant::now();
        let obs = self.executor.get_obs();
        self.tsip.sync_state(obs, self.executor.tool_pose())?;
        self.belief = self.tsip.get_dris()?;
        self.pending_sync += t0.elapsed().as_secs_f64();
        self.pending_obs = Some(obs);
        Ok(())
    }

    fn mean_cage_cost(&self) -> Option<f64> {
        (self.cage_cost_count > 0).then(|| self.cage_cost_sum / self.cage_cost_count as f64)
    }

    fn record_outcome_if_terminal(&mut self) {
        if self.outcome_recorded {
            return;
        }
        if let Some(outcome) = self.executor.outcome() {
            self.record.push(RecordLine::Outcome {
                success: outcome == Outcome::Success,
                steps: self.executor.timestep(),
                mean_cage_cost: self.mean_cage_cost(),
            });
            self.outcome_recorded = true;
        }
    }

    fn record_solve(&mut self, t: u64, belief: &Dris, step: &SolveStep) {
        let cage_cost = self.cage.is_some().then_some(step.cage_cost);
        if let Some(cost) = cage_cost {
            self.cage_cost_sum += cost;
            self.cage_cost_count += 1;
        }
        if step.infeasible {
            self.infeasible_steps += 1;
        }
        if self.log_candidates {
            if let Some(batch) = &step.batch {
                self.record.push(RecordLine::Candidates(CandidateEntry {
                    t,
                    actions: batch.actions.clone(),
                    total_cost: batch.total_cost.clone(),
                    valid: batch.valid.clone(),
                    chosen: step.chosen,
                }));
            }
        }
        self.record.push(RecordLine::Step(StepEntry {
            t,
            observed: self.pending_obs.take(),
            belief: Some(*belief.stats()),
            action: step.action,
            predicted: step.predicted.as_ref().map(|p| *p.stats()),
            true_state: *self.executor.true_state(),
            cage_cost,
            valid: step.valid,
        }));
    }

    fn summarize(&self, timings: Vec<PhaseTiming>) -> EpisodeSummary {
        EpisodeSummary {
            steps: self.executor.timestep(),
            outcome: self.executor.outcome(),
            success: self.executor.success(),
            mean_cage_cost: self.mean_cage_cost(),
            infeasible_steps: self.infeasible_steps,
            timings,
        }
    }

    /// Execute one externally chosen action, then re-observe. For driving
    /// the episode by hand; [`Env::dream`] runs the planner instead.
    pub fn step(&mut self, action: Action) -> Result<StepInfo> {
        let belief_stats = *self.belief.stats();
        let observed = self.pending_obs.take();
        self.executor.execute(&[action])?;
        let info = StepInfo {
            t: self.executor.timestep(),
            true_state: *self.executor.true_state(),
            outcome: self.executor.outcome(),
        };
        self.record.push(RecordLine::Step(StepEntry {
            t: info.t - 1,
            observed,
            belief: Some(belief_stats),
            action,
            predicted: None,
            true_state: info.true_state,
            cage_cost: None,
            valid: true,
        }));
        self.record_outcome_if_terminal();
        if !self.executor.is_terminal() {
            self.observe()?;
        }
        Ok(info)
    }

    /// Run the planner for up to `max_steps` executed steps.
    ///
    /// Online mode interleaves planning and execution and returns the
    /// episode summary. Plan-then-execute mode plans the whole span purely
    /// through the prediction model, leaves the executor untouched, and
    /// returns the plan.
    pub fn dream(&mut self, max_steps: u64) -> Result<DreamResult> {
        match self.config.mode {
            Mode::Online => Ok(DreamResult::Executed(self.run_online(max_steps)?)),
            Mode::PlanThenExecute => Ok(DreamResult::Planned(self.plan_span(max_steps)?)),
        }
    }

    /// Plan, execute, and summarize a full episode in either mode.
    pub fn run_to_end(&mut self) -> Result<EpisodeSummary> {
        match self.dream(self.config.horizon)? {
            DreamResult::Executed(summary) => Ok(summary),
            DreamResult::Planned(plan) => {
                let mut summary = self.execute_plan(&plan)?;
                summary.timings = plan.timings;
                Ok(summary)
            }
        }
    }

    fn run_online(&mut self, max_steps: u64) -> Result<EpisodeSummary> {
        let start_t = self.executor.timestep();
        let chunk = if self.config.solver.n == 1 && self.cage.is_none() {
            1
        } else {
            self.config.chunk
        };
        let mut timings = Vec::new();

        let budget_left =
            |executor: &Executor| executor.timestep() - start_t < max_steps;
        while !self.executor.is_terminal() && budget_left(&self.executor) {
            let mut d = self.belief.clone();
            let mut planned = 0;
            while planned < chunk && !self.executor.is_terminal() && budget_left(&self.executor) {
                let t_exec = self.executor.timestep();
                let in_chunk = chunk - planned - 1;
                let in_budget = (max_steps - (t_exec - start_t) - 1) as usize;
                let lookahead = in_chunk.min(in_budget).min(MAX_SCORE_WINDOW);
                let t0 = Instant::now();
                let mut step =
                    self.solver
                        .solve(&d, &self.tsip, self.cage.as_ref(), t_exec, lookahead)?;
                let solve_elapsed = t0.elapsed().as_secs_f64();
                step.timing.sync = self.pending_sync;
                self.pending_sync = 0.0;
                self.executor.execute(&[step.action])?;
                self.record_solve(t_exec, &d, &step);
                planned += 1;
                let more = planned < chunk
                    && !self.executor.is_terminal()
                    && budget_left(&self.executor);
                let mut chain_elapsed = 0.0;
                if more {
                    let t0 = Instant::now();
                    d = match step.predicted {
                        Some(next) => next,
                        None => self
                            .tsip
                            .next(&d, &[step.action])?
                            .pop()
                            .expect("one action in, one set out"),
                    };
                    chain_elapsed = t0.elapsed().as_secs_f64();
                    step.timing.tsip_next += chain_elapsed;
                }
                step.timing.total = step.timing.sync + solve_elapsed + chain_elapsed;
                timings.push(step.timing);
            }
            if !self.executor.is_terminal() && budget_left(&self.executor) {
                self.observe()?;
            }
        }
        self.record_outcome_if_terminal();
        Ok(self.summarize(timings))
    }

    /// Plan `max_steps` steps ahead purely in the prediction model,
    /// chaining each step's predicted set into the next solve.
    fn plan_span(&mut self, max_steps: u64) -> Result<Plan> {
        let steps = max_steps.min(self.config.horizon);
        let mut d = self.belief.clone();
        let mut plan = Plan {
            actions: Vec::with_capacity(steps as usize),
            steps: Vec::with_capacity(steps as usize),
            infeasible_steps: 0,
            timings: Vec::with_capacity(steps as usize),
        };
        for t in 0..steps {
            let in_chunk = self.config.chunk - (t as usize % self.config.chunk) - 1;
            let in_span = (steps - t - 1) as usize;
            let lookahead = in_chunk.min(in_span).min(MAX_SCORE_WINDOW);
            let t_solve = Instant::now();
            let mut step = self
                .solver
                .solve(&d, &self.tsip, self.cage.as_ref(), t, lookahead)?;
            let solve_elapsed = t_solve.elapsed().as_secs_f64();
            step.timing.sync = self.pending_sync;
            self.pending_sync = 0.0;
            if step.infeasible {
                plan.infeasible_steps += 1;
            }
            if self.log_candidates {
                if let Some(batch) = &step.batch {
                    self.record.push(RecordLine::Candidates(CandidateEntry {
                        t,
                        actions: batch.actions.clone(),
                        total_cost: batch.total_cost.clone(),
                        valid: batch.valid.clone(),
                        chosen: step.chosen,
                    }));
                }
            }
            plan.steps.push(PlanStep {
                belief: *d.stats(),
                predicted: step.predicted.as_ref().map(|p| *p.stats()),
                cage_cost: self.cage.is_some().then_some(step.cage_cost),
                valid: step.valid,
            });
            plan.actions.push(step.action);
            let t0 = Instant::now();
            d = match step.predicted {
                Some(next) => next,
                None => self
                    .tsip
                    .next(&d, &[step.action])?
                    .pop()
                    .expect("one action in, one set out"),
            };
            let chain_elapsed = t0.elapsed().as_secs_f64();
            step.timing.tsip_next += chain_elapsed;
            step.timing.total = step.timing.sync + solve_elapsed + chain_elapsed;
            plan.timings.push(step.timing);
        }
        Ok(plan)
    }

    /// Execute a plan produced by [`Env::dream`] on the still-fresh
    /// executor, carrying step metadata into the record.
    pub fn execute_plan(&mut self, plan: &Plan) -> Result<EpisodeSummary> {
        self.run_actions(&plan.actions, Some(plan))
    }

    /// Re-execute a recorded action sequence on a fresh episode.
    pub fn replay(&mut self, actions: &[Action]) -> Result<EpisodeSummary> {
        self.run_actions(actions, None)
    }

    fn run_actions(&mut self, actions: &[Action], plan: Option<&Plan>) -> Result<EpisodeSummary> {
        if self.executor.timestep() != 0 {
            return Err(Error::state("replay requires a fresh episode"));
        }
        if actions.is_empty() {
            return Err(Error::state("cannot replay an empty action sequence"));
        }
        let chunk = self.config.chunk.max(1);
        let mut executed = 0usize;
        for group in actions.chunks(chunk) {
            if self.executor.is_terminal() {
                break;
            }
            self.executor.execute(group)?;
            for (offset, &action) in group.iter().enumerate() {
                let t = (executed + offset) as u64;
                let meta = plan.and_then(|p| p.steps.get(t as usize));
                let cage_cost = meta.and_then(|m| m.cage_cost);
                if let Some(cost) = cage_cost {
                    self.cage_cost_sum += cost;
                    self.cage_cost_count += 1;
                }
                self.record.push(RecordLine::Step(StepEntry {
                    t,
                    observed: if t == 0 { self.pending_obs.take() } else { None },
                    belief: meta.map(|m| m.belief),
                    action,
                    predicted: meta.and_then(|m| m.predicted),
                    true_state: self.executor.history()[t as usize + 1],
                    cage_cost,
                    valid: meta.map_or(true, |m| m.valid),
                }));
            }
            executed += group.len();
        }
        if let Some(p) = plan {
            self.infeasible_steps += p.infeasible_steps;
        }
        self.record_outcome_if_terminal();
        Ok(self.summarize(Vec::new()))
    }
}
