//! Episode batches: run many seeds against one config, optionally across
//! threads, with results always in input order.

use dreamplan_core::config::EnvConfig;
use dreamplan_core::env::Env;
use dreamplan_core::{Error, Result};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct EpisodeOutcome {
    pub success: bool,
    pub steps: u64,
    pub mean_cage_cost: Option<f64>,
    pub infeasible_steps: u64,
}

pub fn run_episode(config: &EnvConfig, episode_seed: u64) -> Result<EpisodeOutcome> {
    let mut env = Env::new(config.clone(), episode_seed)?;
    let summary = env.run_to_end()?;
    Ok(EpisodeOutcome {
        success: summary.success,
        steps: summary.steps,
        mean_cage_cost: summary.mean_cage_cost,
        infeasible_steps: summary.infeasible_steps,
    })
}

/// Run one episode per seed. `jobs` of 1 (the default) runs inline; more
/// spreads episodes over a dedicated thread pool. Episodes are independent
/// and collected in seed order, so the outcome vector does not depend on
/// the thread count.
pub fn run_batch(
    config: &EnvConfig,
    seeds: &[u64],
    jobs: Option<usize>,
) -> Result<Vec<EpisodeOutcome>> {
    match jobs.unwrap_or(1) {
        0 => Err(Error::config("--jobs", "must be at least 1")),
        1 => seeds.iter().map(|s| run_episode(config, *s)).collect(),
        threads => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::config("--jobs", e.to_string()))?;
            pool.install(|| {
                seeds
                    .par_iter()
                    .map(|s| run_episode(config, *s))
                    .collect()
            })
        }
    }
}
