//! Candidate sampling, scoring, and action selection.
//!
//! One control step of the planner runs here: a sampler proposes N
//! candidate actions, the prediction frontend maps the current instance set
//! through each, the active cage scores and filters the outcomes, and an
//! optimizer picks the action to execute. Two optimizers are provided:
//! single-pass best-of-N selection and iterative reweighted refinement.

use crate::cage::{ActiveCage, Cage};
use crate::dris::Dris;
use crate::error::{Error, Result};
use crate::policy::{Policy, PolicyId};
use crate::task::{Action, ActionBounds, Goal, TaskId, TaskWorld};
use crate::tsip::Tsip;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::time::Instant;

pub const DEFAULT_CANDIDATES: usize = 8;
pub const DEFAULT_CAGE_WEIGHT: f64 = 0.1;

/// Where the Gaussian sampler centers its draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanSource {
    Fixed { mean: [f64; 2] },
    /// Previous selected action; zero before the first selection.
    Previous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum SamplerConfig {
    Gaussian {
        mean_source: MeanSource,
        std: [f64; 2],
    },
    DiscreteSet {
        actions: Vec<Action>,
    },
    ScriptedPolicy {
        policy: PolicyId,
        exploration_std: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MppiConfig {
    pub iterations: usize,
    pub temperature: f64,
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum OptimizerConfig {
    NBest,
    Mppi(MppiConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub sampler: SamplerConfig,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerConfig,
}

fn default_n() -> usize {
    DEFAULT_CANDIDATES
}

fn default_lambda() -> f64 {
    DEFAULT_CAGE_WEIGHT
}

fn default_optimizer() -> OptimizerConfig {
    OptimizerConfig::NBest
}

impl SolverConfig {
    pub fn default_for(task: TaskId) -> Self {
        Self {
            n: DEFAULT_CANDIDATES,
            lambda: DEFAULT_CAGE_WEIGHT,
            sampler: SamplerConfig::ScriptedPolicy {
                policy: PolicyId::for_task(task),
                exploration_std: 0.030,
            },
            optimizer: OptimizerConfig::NBest,
        }
    }

    pub fn validate(&self, task: TaskId, bounds: &ActionBounds, path: &str) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config(format!("{path}.n"), "must be at least 1"));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::config(
                format!("{path}.lambda"),
                format!("must be finite and nonnegative, got {}", self.lambda),
            ));
        }
        match &self.sampler {
            SamplerConfig::Gaussian { mean_source, std } => {
                if let MeanSource::Fixed { mean } = mean_source {
                    if !mean.iter().all(|v| v.is_finite()) {
                        return Err(Error::config(
                            format!("{path}.sampler.mean_source"),
                            "mean must be finite",
                        ));
                    }
                }
                if !std.iter().all(|v| v.is_finite() && *v >= 0.0) {
                    return Err(Error::config(
                        format!("{path}.sampler.std"),
                        "stds must be finite and nonnegative",
                    ));
                }
            }
            SamplerConfig::DiscreteSet { actions } => {
                if actions.len() != self.n {
                    return Err(Error::config(
                        format!("{path}.sampler.actions"),
                        format!("set size {} must equal n = {}", actions.len(), self.n),
                    ));
                }
                for (i, a) in actions.iter().enumerate() {
                    if !bounds.contains(a) {
                        return Err(Error::config(
                            format!("{path}.sampler.actions[{i}]"),
                            "action outside the task bounds",
                        ));
                    }
                }
            }
            SamplerConfig::ScriptedPolicy {
                policy,
                exploration_std,
            } => {
                policy.validate(task, &format!("{path}.sampler.policy"))?;
                if !exploration_std.is_finite() || *exploration_std < 0.0 {
                    return Err(Error::config(
                        format!("{path}.sampler.exploration_std"),
                        format!("must be finite and nonnegative, got {exploration_std}"),
                    ));
                }
            }
        }
        if let OptimizerConfig::Mppi(m) = &self.optimizer {
            if m.iterations == 0 {
                return Err(Error::config(
                    format!("{path}.optimizer.iterations"),
                    "must be at least 1",
                ));
            }
            if !m.temperature.is_finite() || m.temperature <= 0.0 {
                return Err(Error::config(
                    format!("{path}.optimizer.temperature"),
                    format!("must be positive, got {}", m.temperature),
                ));
            }
            if matches!(self.sampler, SamplerConfig::DiscreteSet { .. }) {
                return Err(Error::config(
                    format!("{path}.optimizer"),
                    "iterative refinement needs a continuous sampler, not a discrete set",
                ));
            }
        }
        Ok(())
    }
}

/// Per-candidate scoring results for one control step.
///
/// `predicted` always holds the one-step outcomes, and `valid` is judged
/// on them alone. The cost columns are aggregates over the scoring window:
/// with a continuation, `task_cost` is taken at the window's end and
/// `cage_cost` is the mean over its steps, so later excursions still
/// penalize a candidate without disqualifying it outright.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateBatch {
    pub actions: Vec<Action>,
    pub predicted: Vec<Dris>,
    pub cage_cost: Vec<f64>,
    pub task_cost: Vec<f64>,
    pub valid: Vec<bool>,
    pub total_cost: Vec<f64>,
}

/// How far scoring extends a candidate past its first step, toward the
/// next observation: each candidate action is held for the window and
/// judged by where it leads. Holding, rather than closing the loop with
/// the policy inside the window, keeps candidate outcomes distinct; the
/// executed plan still corrects every step because only the first action
/// of the window is ever executed.
#[derive(Debug, Clone, Copy)]
pub struct Continuation {
    pub steps: usize,
}

/// Longest scoring continuation. A held action stays informative for a few
/// steps; further out the comparison rewards luck over merit, so the window
/// is capped even when the next observation is more steps away.
pub const MAX_SCORE_WINDOW: usize = 3;

/// Task progress cost of a predicted instance set at global timestep `t`:
/// distance of the mean object position to where the task wants it.
pub fn task_cost(world: &TaskWorld, d: &Dris, t: u64) -> f64 {
    let mean = &d.stats().mean;
    match &world.goal {
        Goal::Point { position, .. } => {
            let (dx, dy) = (mean.x - position[0], mean.y - position[1]);
            (dx * dx + dy * dy).sqrt()
        }
        Goal::Circle { .. } => {
            let r = world.goal.reference_point(t);
            let (dx, dy) = (mean.x - r[0], mean.y - r[1]);
            (dx * dx + dy * dy).sqrt()
        }
        Goal::Plate => {
            let (dx, dy) = (mean.x - mean.rx, mean.y - mean.ry);
            (dx * dx + dy * dy).sqrt()
        }
    }
}

/// Wall time spent inside [`score_batch`] on prediction and constraint
/// checks. Task costing and cost totaling land in the caller's residual.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScoreTimes {
    pub tsip_next: f64,
    pub cage_eval: f64,
}

/// Predict and score a batch of candidates. `t_next` is the global timestep
/// the one-step predictions land on; the continuation extends scoring from
/// there toward the next observation.
pub fn score_batch(
    tsip: &Tsip,
    d: &Dris,
    actions: &[Action],
    cage: Option<&Cage>,
    t_next: u64,
    lambda: f64,
    continuation: Continuation,
) -> Result<(CandidateBatch, ScoreTimes)> {
    let mut times = ScoreTimes::default();
    let t0 = Instant::now();
    let predicted = tsip.next(d, actions)?;
    times.tsip_next += t0.elapsed().as_secs_f64();

    let steps = continuation.steps;
    let t0 = Instant::now();
    let actives: Vec<ActiveCage> = match cage {
        Some(c) => (0..=steps as u64).map(|k| c.update(t_next + k)).collect(),
        None => Vec::new(),
    };
    times.cage_eval += t0.elapsed().as_secs_f64();
    let world = tsip.world();

    let mut cage_cost = vec![0.0; actions.len()];
    let mut valid = vec![true; actions.len()];
    let mut task = vec![0.0; actions.len()];
    for (i, one_step) in predicted.iter().enumerate() {
        let mut current = one_step.clone();
        for k in 0..=steps as u64 {
            if k > 0 {
                let t0 = Instant::now();
                current = tsip.next(&current, &[actions[i]])?.pop().expect("one action in");
                times.tsip_next += t0.elapsed().as_secs_f64();
            }
            if let Some(active) = actives.get(k as usize) {
                let t0 = Instant::now();
                cage_cost[i] += active.evaluate(&current);
                if k == 0 {
                    valid[i] = active.validate(&current);
                }
                times.cage_eval += t0.elapsed().as_secs_f64();
            }
        }
        cage_cost[i] /= (steps + 1) as f64;
        task[i] = task_cost(world, &current, t_next + steps as u64);
    }
    let total: Vec<f64> = task
        .iter()
        .zip(&cage_cost)
        .map(|(t, c)| t + lambda * c)
        .collect();
    Ok((
        CandidateBatch {
            actions: actions.to_vec(),
            predicted,
            cage_cost,
            task_cost: task,
            valid,
            total_cost: total,
        },
        times,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub index: usize,
    /// Set when no candidate passed validation and the least-violating one
    /// was chosen instead.
    pub infeasible: bool,
}

/// Best-of-N selection: lowest total cost among valid candidates, ties
/// broken by lowest index. With no valid candidate, falls back to the
/// lowest cage cost and flags the step infeasible.
pub fn select_nbest(batch: &CandidateBatch) -> Selection {
    let argmin = |keys: &[f64], keep: &dyn Fn(usize) -> bool| -> Option<usize> {
        let mut best: Option<usize> = None;
        for i in 0..keys.len() {
            if keep(i) && best.map_or(true, |b| keys[i] < keys[b]) {
                best = Some(i);
            }
        }
        best
    };
    if let Some(i) = argmin(&batch.total_cost, &|i| batch.valid[i]) {
        return Selection {
            index: i,
            infeasible: false,
        };
    }
    Selection {
        index: argmin(&batch.cage_cost, &|_| true).expect("batch is nonempty"),
        infeasible: true,
    }
}

/// Exponential weights over candidates: invalid ones get zero, valid ones
/// exp(−(cost − best)/temperature). The shift by the best valid cost keeps
/// the exponents bounded; normalization happens in the weighted average.
pub fn mppi_weights(total_cost: &[f64], valid: &[bool], temperature: f64) -> Vec<f64> {
    let best = total_cost
        .iter()
        .zip(valid)
        .filter(|(_, v)| **v)
        .map(|(c, _)| *c)
        .fold(f64::INFINITY, f64::min);
    total_cost
        .iter()
        .zip(valid)
        .map(|(c, v)| {
            if *v {
                (-(c - best) / temperature).exp()
            } else {
                0.0
            }
        })
        .collect()
}

/// One refinement iteration: sample candidates around `mean` (candidate 0
/// is the mean itself), score them through `eval`, and return the reweighted
/// mean. With no valid candidate the mean is kept and the stds widen by
/// 1.5x so the next iteration searches a larger region.
pub fn mppi_iteration<F>(
    mean: Action,
    std: [f64; 2],
    n: usize,
    temperature: f64,
    bounds: &ActionBounds,
    rng: &mut ChaCha8Rng,
    eval: F,
) -> (Action, [f64; 2], bool)
where
    F: FnOnce(&[Action]) -> (Vec<f64>, Vec<bool>),
{
    let mut actions = Vec::with_capacity(n);
    actions.push(bounds.clamp(mean));
    for _ in 1..n {
        let nx: f64 = StandardNormal.sample(rng);
        let ny: f64 = StandardNormal.sample(rng);
        actions.push(bounds.clamp(Action::new(
            mean.dx + std[0] * nx,
            mean.dy + std[1] * ny,
        )));
    }
    let (total, valid) = eval(&actions);
    debug_assert_eq!(total.len(), n);
    let weights = mppi_weights(&total, &valid, temperature);
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return (mean, [std[0] * 1.5, std[1] * 1.5], false);
    }
    let (mut ax, mut ay) = (0.0, 0.0);
    for (w, a) in weights.iter().zip(&actions) {
        ax += w * a.dx;
        ay += w * a.dy;
    }
    (
        bounds.clamp(Action::new(ax / sum, ay / sum)),
        std,
        true,
    )
}

/// Wall time per planning phase for one control step, in seconds. Kept in
/// memory for profiling; never serialized into records, which must stay
/// byte-reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTiming {
    pub sync: f64,
    pub sample: f64,
    pub tsip_next: f64,
    pub cage_eval: f64,
    pub select: f64,
    /// Wall time of the whole planning step, observation expansion through
    /// selection and any chained prediction; execution and record keeping
    /// excluded. Filled by the loop around the solver.
    pub total: f64,
}

impl PhaseTiming {
    pub fn phase_sum(&self) -> f64 {
        self.sync + self.sample + self.tsip_next + self.cage_eval + self.select
    }
}

/// Result of one control step of planning.
#[derive(Debug, Clone)]
pub struct SolveStep {
    pub action: Action,
    /// Predicted outcome of the selected action. Absent in the single
    /// candidate, no-cage reduction, where prediction is skipped.
    pub predicted: Option<Dris>,
    /// Scored candidates, for diagnostics. Absent in the reduction.
    pub batch: Option<CandidateBatch>,
    /// Index of the selected action within `batch`, where one exists.
    pub chosen: usize,
    /// Cage cost of the selected action, zero without a cage.
    pub cage_cost: f64,
    /// Whether the selected action keeps the whole predicted set inside
    /// the cage. Vacuously true without a cage.
    pub valid: bool,
    pub infeasible: bool,
    pub timing: PhaseTiming,
}

/// Stateful planner for one episode: owns the sampler's noise stream, the
/// scripted policy if one is configured, and the warm-start action.
#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    policy: Option<Policy>,
    warm: Option<Action>,
    rng: ChaCha8Rng,
}

impl Solver {
    pub fn new(config: SolverConfig, task: TaskId, bounds: &ActionBounds, seed: u64) -> Result<Self> {
        config.validate(task, bounds, "solver")?;
        let policy = match &config.sampler {
            SamplerConfig::ScriptedPolicy { policy, .. } => Some(Policy::new(*policy)),
            _ => None,
        };
        Ok(Self {
            config,
            policy,
            warm: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Sampling center and per-axis stds for the current step.
    fn sampling_base(&self, d: &Dris, t: u64, world: &TaskWorld) -> (Action, [f64; 2]) {
        match &self.config.sampler {
            SamplerConfig::Gaussian { mean_source, std } => {
                let mean = match mean_source {
                    MeanSource::Fixed { mean } => Action::new(mean[0], mean[1]),
                    MeanSource::Previous => self.warm.unwrap_or(Action::ZERO),
                };
                (world.bounds.clamp(mean), *std)
            }
            SamplerConfig::ScriptedPolicy {
                exploration_std, ..
            } => {
                let policy = self.policy.as_ref().expect("built with the config");
                let base = policy.act(&d.stats().mean, t, world);
                (base, [*exploration_std; 2])
            }
            SamplerConfig::DiscreteSet { .. } => unreachable!("discrete sets skip sampling_base"),
        }
    }

    /// Propose the candidate actions for this step. Candidate 0 carries the
    /// un-noised base action, so the pure policy action is always in the
    /// batch and a single-candidate solver is exactly the policy.
    fn sample(&mut self, d: &Dris, t: u64, world: &TaskWorld) -> Vec<Action> {
        if let SamplerConfig::DiscreteSet { actions } = &self.config.sampler {
            return actions.clone();
        }
        let (base, std) = self.sampling_base(d, t, world);
        let mut out = Vec::with_capacity(self.config.n);
        out.push(base);
        for _ in 1..self.config.n {
            let nx: f64 = StandardNormal.sample(&mut self.rng);
            let ny: f64 = StandardNormal.sample(&mut self.rng);
            out.push(world.bounds.clamp(Action::new(
                base.dx + std[0] * nx,
                base.dy + std[1] * ny,
            )));
        }
        out
    }

    /// Run one planning step on `d`. `t_exec` is the global timestep the
    /// chosen action will be executed at; predicted outcomes land on
    /// `t_exec + 1`, which is when the cage is activated. `lookahead` is
    /// how many steps past that the scoring window extends, normally to
    /// the next observation.
    ///
    /// With one candidate and no cage this reduces to evaluating the sampler
    /// alone: no prediction, no scoring, the sampler's action is returned
    /// as-is.
    pub fn solve(
        &mut self,
        d: &Dris,
        tsip: &Tsip,
        cage: Option<&Cage>,
        t_exec: u64,
        lookahead: usize,
    ) -> Result<SolveStep> {
        let solve_t0 = Instant::now();
        let world = *tsip.world();
        let mut timing = PhaseTiming::default();

        let t0 = Instant::now();
        let actions = self.sample(d, t_exec, &world);
        timing.sample = t0.elapsed().as_secs_f64();

        if self.config.n == 1 && cage.is_none() {
            let action = actions[0];
            self.warm = Some(action);
            timing.select = (solve_t0.elapsed().as_secs_f64() - timing.sample).max(0.0);
            return Ok(SolveStep {
                action,
                predicted: None,
                batch: None,
                chosen: 0,
                cage_cost: 0.0,
                valid: true,
                infeasible: false,
                timing,
            });
        }

        let mut step = match self.config.optimizer {
            OptimizerConfig::NBest => {
                let (batch, times) = score_batch(
                    tsip,
                    d,
                    &actions,
                    cage,
                    t_exec + 1,
                    self.config.lambda,
                    Continuation { steps: lookahead },
                )?;
                timing.tsip_next = times.tsip_next;
                timing.cage_eval = times.cage_eval;
                let sel = select_nbest(&batch);
                SolveStep {
                    action: batch.actions[sel.index],
                    predicted: Some(batch.predicted[sel.index].clone()),
                    chosen: sel.index,
                    cage_cost: batch.cage_cost[sel.index],
                    valid: batch.valid[sel.index],
                    batch: Some(batch),
                    infeasible: sel.infeasible,
                    timing,
                }
            }
            OptimizerConfig::Mppi(mppi) => {
                let continuation = Continuation { steps: lookahead };
                let (base, base_std) = self.sampling_base(d, t_exec, &world);
                let mut mean = if mppi.warm_start {
                    self.warm.unwrap_or(base)
                } else {
                    base
                };
                let mut std = base_std;
                let mut last_batch: Option<CandidateBatch> = None;
                let mut any_valid = false;
                for _ in 0..mppi.iterations {
                    let (next_mean, next_std, ok) = mppi_iteration(
                        mean,
                        std,
                        self.config.n,
                        mppi.temperature,
                        &world.bounds,
                        &mut self.rng,
                        |acts| {
                            let (batch, times) = score_batch(
                                tsip,
                                d,
                                acts,
                                cage,
                                t_exec + 1,
                                self.config.lambda,
                                continuation,
                            )
                            .expect("sampled actions are clamped in bounds");
                            timing.tsip_next += times.tsip_next;
                            timing.cage_eval += times.cage_eval;
                            let out = (batch.total_cost.clone(), batch.valid.clone());
                            last_batch = Some(batch);
                            out
                        },
                    );
                    mean = next_mean;
                    std = next_std;
                    any_valid = ok;
                }
                let (final_batch, times) = score_batch(
                    tsip,
                    d,
                    &[mean],
                    cage,
                    t_exec + 1,
                    self.config.lambda,
                    continuation,
                )?;
                timing.tsip_next += times.tsip_next;
                timing.cage_eval += times.cage_eval;
                SolveStep {
                    action: mean,
                    predicted: Some(final_batch.predicted[0].clone()),
                    batch: last_batch,
                    chosen: 0,
                    cage_cost: final_batch.cage_cost[0],
                    valid: final_batch.valid[0],
                    infeasible: !any_valid,
                    timing,
                }
            }
        };
        self.warm = Some(step.action);
        // Whatever the call spent outside sampling, prediction, and constraint
        // checks is scoring and selection bookkeeping, so charging the residual
        // to `select` keeps the phase sums equal to the whole solve by
        // construction.
        step.timing.select = (solve_t0.elapsed().as_secs_f64()
            - step.timing.sample
            - step.timing.tsip_next
            - step.timing.cage_eval)
            .max(0.0);
        Ok(step)
    }
}
