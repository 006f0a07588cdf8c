//! Config loading and seed resolution shared by all subcommands.

use crate::args::CommonArgs;
use dreamplan_core::config::EnvConfig;
use dreamplan_core::{Error, Result};

pub const SEED_ENV_VAR: &str = "DREAMPLAN_SEED";

/// Seed precedence: the --seed flag, then the environment variable, then
/// the config file.
pub fn resolve_seed(flag: Option<u64>, from_config: u64) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text.trim().parse().map_err(|_| {
            Error::config(SEED_ENV_VAR, format!("expected an unsigned integer, got `{text}`"))
        }),
        Err(_) => Ok(from_config),
    }
}

/// Load and validate the config, then bake the resolved master seed into
/// it so the config hash covers the seed actually used.
pub fn load_config(args: &CommonArgs) -> Result<EnvConfig> {
    let mut config = EnvConfig::from_file(&args.config)?;
    config.seed = resolve_seed(args.seed, config.seed)?;
    Ok(config)
}

/// Reject flags a subcommand has no meaning for, rather than silently
/// ignoring them.
pub fn reject_flags(args: &CommonArgs, command: &str) -> Result<()> {
    if args.baseline {
        return Err(Error::config(
            "--baseline",
            format!("{command} chooses its own method set"),
        ));
    }
    if args.log_candidates {
        return Err(Error::config(
            "--log-candidates",
            format!("{command} writes no episode records"),
        ));
    }
    Ok(())
}
