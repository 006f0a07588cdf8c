//! `dreamplan sweep`: one perturbation axis over its grid, full method
//! against baseline, paired episode seeds.

use crate::args::CommonArgs;
use crate::common::{load_config, reject_flags};
use crate::points::{
    format_value, write_grid_csv, write_to_out, GridPoint, PointRunner, METHOD_BASELINE,
    METHOD_FULL,
};
use dreamplan_core::seed::derive_seed;
use dreamplan_core::{Error, Result};

pub const SWEEP_SEED_TAG: &str = "sweep-episode";

pub fn cmd_sweep(args: &CommonArgs) -> Result<()> {
    reject_flags(args, "sweep")?;
    let config = load_config(args)?;
    let Some(spec) = config.sweep.clone() else {
        return Err(Error::config("sweep", "sweep requires a sweep section"));
    };
    let master_seed = config.seed;
    let base_hash = config.hash();

    // The same seed list serves every grid point and both methods, so each
    // episode is a paired comparison.
    let seeds: Vec<u64> = (0..spec.runs * spec.episodes)
        .map(|i| derive_seed(master_seed, SWEEP_SEED_TAG, i as u64))
        .collect();

    let runner = PointRunner {
        base_hash: &base_hash,
        seeds: &seeds,
        runs: spec.runs,
        episodes: spec.episodes,
        jobs: args.jobs,
        ckpt_dir: args.out.as_ref().map(|p| {
            let mut dir = p.as_os_str().to_owned();
            dir.push(".ckpt");
            dir.into()
        }),
    };

    let axis = spec.axis.as_str();
    let mut rows = Vec::new();
    for &value in &spec.grid {
        let point_config = spec.apply(&config, value);
        for (method, method_config) in [
            (METHOD_FULL, point_config.clone()),
            (METHOD_BASELINE, point_config.baseline_variant()),
        ] {
            let point = GridPoint {
                axis: axis.to_string(),
                value: format_value(value),
                method: method.to_string(),
                config: method_config,
            };
            let result = runner.run_point(&point)?;
            rows.push((point, result));
        }
    }

    write_to_out(args.out.as_deref(), |out| {
        write_grid_csv(
            out,
            "sweep",
            &base_hash,
            master_seed,
            SWEEP_SEED_TAG,
            spec.runs,
            spec.episodes,
            &rows,
        )
    })?;
    if let Some(path) = &args.out {
        eprintln!("sweep written to {}", path.display());
    }
    Ok(())
}
