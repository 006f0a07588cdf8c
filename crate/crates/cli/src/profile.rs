//! `dreamplan profile`: per-step planning time across a ladder of
//! candidate and instance counts, reported as JSON.
//!
//! Episodes run sequentially on one thread so the timings mean something.
//! Wall-clock numbers are hardware dependent, which is why they live here
//! and never in episode records or sweep CSVs.

use crate::args::CommonArgs;
use crate::common::{load_config, reject_flags};
use crate::points::write_to_out;
use dreamplan_core::config::{EnvConfig, TOOL_VERSION};
use dreamplan_core::env::Env;
use dreamplan_core::seed::derive_seed;
use dreamplan_core::solver::PhaseTiming;
use dreamplan_core::Result;
use serde::Serialize;

pub const PROFILE_SEED_TAG: &str = "profile-episode";
const PROFILE_EPISODES: usize = 3;
/// Steps dropped from the front of each episode before aggregating, to
/// keep cold caches and lazy allocation out of the stats.
const WARMUP_STEPS: usize = 5;
const LADDER: [(usize, usize); 4] = [(1, 1), (4, 2), (8, 4), (16, 8)];

#[derive(Debug, Serialize)]
struct PhaseMeans {
    sync: f64,
    sample: f64,
    tsip_next: f64,
    cage_eval: f64,
    select: f64,
}

#[derive(Debug, Serialize)]
struct ProfileRow {
    label: String,
    n: usize,
    m: usize,
    cage: bool,
    steps: usize,
    median_step_s: f64,
    p95_step_s: f64,
    mean_step_s: f64,
    phases: PhaseMeans,
    phase_sum_s: f64,
}

#[derive(Debug, Serialize)]
struct ProfileReport {
    tool_version: &'static str,
    config_hash: String,
    seed: u64,
    rows: Vec<ProfileRow>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn profile_row(label: &str, config: &EnvConfig, seeds: &[u64]) -> Result<ProfileRow> {
    let mut timings: Vec<PhaseTiming> = Vec::new();
    for &seed in seeds {
        let mut env = Env::new(config.clone(), seed)?;
        let summary = env.run_to_end()?;
        timings.extend(summary.timings.into_iter().skip(WARMUP_STEPS));
    }
    let steps = timings.len();
    let mut totals: Vec<f64> = timings.iter().map(|t| t.total).collect();
    totals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = |f: fn(&PhaseTiming) -> f64| timings.iter().map(f).sum::<f64>() / steps as f64;
    let phases = PhaseMeans {
        sync: mean(|t| t.sync),
        sample: mean(|t| t.sample),
        tsip_next: mean(|t| t.tsip_next),
        cage_eval: mean(|t| t.cage_eval),
        select: mean(|t| t.select),
    };
    let phase_sum_s =
        phases.sync + phases.sample + phases.tsip_next + phases.cage_eval + phases.select;
    Ok(ProfileRow {
        label: label.to_string(),
        n: config.solver.n,
        m: config.dris.m,
        cage: config.cage.is_some(),
        steps,
        median_step_s: quantile(&totals, 0.5),
        p95_step_s: quantile(&totals, 0.95),
        mean_step_s: totals.iter().sum::<f64>() / steps as f64,
        phases,
        phase_sum_s,
    })
}

pub fn cmd_profile(args: &CommonArgs) -> Result<()> {
    reject_flags(args, "profile")?;
    if args.jobs.is_some() {
        eprintln!("note: profiling runs sequentially, --jobs ignored");
    }
    let config = load_config(args)?;
    let master_seed = config.seed;
    let hash = config.hash();

    let seeds: Vec<u64> = (0..PROFILE_EPISODES)
        .map(|e| derive_seed(master_seed, PROFILE_SEED_TAG, e as u64))
        .collect();

    let mut rows = Vec::new();
    rows.push(profile_row("baseline", &config.baseline_variant(), &seeds)?);
    for (n, m) in LADDER {
        let mut c = config.clone();
        c.solver.n = n;
        c.dris.m = m;
        rows.push(profile_row(&format!("n{n}-m{m}"), &c, &seeds)?);
    }

    let report = ProfileReport {
        tool_version: TOOL_VERSION,
        config_hash: hash,
        seed: master_seed,
        rows,
    };
    write_to_out(args.out.as_deref(), |out| {
        serde_json::to_writer_pretty(&mut *out, &report)?;
        writeln!(out)?;
        Ok(())
    })?;
    if let Some(path) = &args.out {
        eprintln!("profile written to {}", path.display());
    }
    Ok(())
}
