//! `dreamplan run`: a single episode, optionally recorded to JSONL.

use crate::args::CommonArgs;
use crate::common::load_config;
use dreamplan_core::config::TOOL_VERSION;
use dreamplan_core::env::Env;
use dreamplan_core::executor::Outcome;
use dreamplan_core::record::RecordWriter;
use dreamplan_core::Result;

pub fn cmd_run(args: &CommonArgs) -> Result<()> {
    let mut config = load_config(args)?;
    if args.baseline {
        config = config.baseline_variant();
    }
    let seed = config.seed;
    let hash = config.hash();

    let mut env = Env::new(config, seed)?;
    env.set_log_candidates(args.log_candidates);
    let summary = env.run_to_end()?;

    if let Some(path) = &args.out {
        let mut writer = RecordWriter::create(path)?;
        for line in env.take_record() {
            writer.write(&line)?;
        }
        writer.finish()?;
        eprintln!("record written to {}", path.display());
    }

    let outcome = match summary.outcome {
        Some(Outcome::Success) => "success",
        Some(Outcome::Failure) => "failure",
        None => "timeout",
    };
    let cage_cost = summary
        .mean_cage_cost
        .map_or_else(|| "none".to_string(), |c| format!("{c:.4}"));
    println!(
        "outcome={outcome} steps={} infeasible_steps={} mean_cage_cost={cage_cost} \
         seed={seed} config_hash={hash} tool_version={TOOL_VERSION}",
        summary.steps, summary.infeasible_steps
    );
    Ok(())
}
