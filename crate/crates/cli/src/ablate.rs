//! `dreamplan ablate`: one knob of the full method varied over its grid
//! under a fixed stress protocol, everything else held at the config.

use crate::args::{AblateArgs, AblateWhich};
use crate::common::{load_config, reject_flags};
use crate::points::{
    format_value, write_grid_csv, write_to_out, GridPoint, PointRunner, METHOD_FULL,
};
use dreamplan_core::config::EnvConfig;
use dreamplan_core::context::WidthPreset;
use dreamplan_core::executor::PerturbationConfig;
use dreamplan_core::seed::derive_seed;
use dreamplan_core::Result;

pub const ABLATE_SEED_TAG: &str = "ablate-episode";
const ABLATE_EPISODES: usize = 100;
const COUNT_GRID: [usize; 5] = [1, 4, 8, 16, 32];
const WIDTH_GRID: [&str; 3] = ["narrow", "medium", "wide"];

/// The stress protocol every cell runs under: short chunks, moderate
/// observation noise, moderate model mismatch.
fn apply_protocol(config: &EnvConfig) -> EnvConfig {
    let mut out = config.clone();
    out.chunk = 3;
    out.perturbation = PerturbationConfig {
        obs_noise_std: 0.04,
        obs_delay_steps: 0,
        physics_severity: 0.4,
    };
    out
}

fn cells(which: AblateWhich, protocol: &EnvConfig) -> Vec<(String, String, EnvConfig)> {
    match which {
        AblateWhich::M => COUNT_GRID
            .iter()
            .map(|&m| {
                let mut c = protocol.clone();
                c.dris.m = m;
                ("m".to_string(), format_value(m as f64), c)
            })
            .collect(),
        AblateWhich::N => COUNT_GRID
            .iter()
            .map(|&n| {
                let mut c = protocol.clone();
                c.solver.n = n;
                ("n".to_string(), format_value(n as f64), c)
            })
            .collect(),
        AblateWhich::Width => WIDTH_GRID
            .iter()
            .map(|&name| {
                let mut c = protocol.clone();
                c.dris.width = WidthPreset::named(name).expect("known width name");
                ("width".to_string(), name.to_string(), c)
            })
            .collect(),
    }
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<()> {
    reject_flags(&args.common, "ablate")?;
    let config = load_config(&args.common)?;
    let protocol = apply_protocol(&config);
    let master_seed = protocol.seed;
    let base_hash = protocol.hash();

    let seeds: Vec<u64> = (0..ABLATE_EPISODES)
        .map(|e| derive_seed(master_seed, ABLATE_SEED_TAG, e as u64))
        .collect();

    let runner = PointRunner {
        base_hash: &base_hash,
        seeds: &seeds,
        runs: 1,
        episodes: ABLATE_EPISODES,
        jobs: args.common.jobs,
        ckpt_dir: args.common.out.as_ref().map(|p| {
            let mut dir = p.as_os_str().to_owned();
            dir.push(".ckpt");
            dir.into()
        }),
    };

    let mut rows = Vec::new();
    for (axis, value, cell_config) in cells(args.which, &protocol) {
        let point = GridPoint {
            axis,
            value,
            method: METHOD_FULL.to_string(),
            config: cell_config,
        };
        let result = runner.run_point(&point)?;
        rows.push((point, result));
    }

    write_to_out(args.common.out.as_deref(), |out| {
        write_grid_csv(
            out,
            "ablate",
            &base_hash,
            master_seed,
            ABLATE_SEED_TAG,
            1,
            ABLATE_EPISODES,
            &rows,
        )
    })?;
    if let Some(path) = &args.common.out {
        eprintln!("ablation written to {}", path.display());
    }
    Ok(())
}
