//! Grid-point running shared by sweep and ablate: per-point checkpointing,
//! run-mean aggregation, and the CSV output format.
//!
//! A checkpoint holds the exact per-run success means of one finished grid
//! point, keyed by config hash, axis, value, and method. Resuming from
//! checkpoints therefore reproduces the CSV byte for byte.

use crate::episode::run_batch;
use dreamplan_core::config::{EnvConfig, TOOL_VERSION};
use dreamplan_core::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const METHOD_FULL: &str = "manidreams";
pub const METHOD_BASELINE: &str = "baseline";

/// One cell of a grid: a fully resolved config plus the labels it is
/// reported under.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub axis: String,
    pub value: String,
    pub method: String,
    pub config: EnvConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointResult {
    pub run_means: Vec<f64>,
}

impl PointResult {
    pub fn mean(&self) -> f64 {
        self.run_means.iter().sum::<f64>() / self.run_means.len() as f64
    }

    /// Population standard deviation over the run means.
    pub fn std(&self) -> f64 {
        let mean = self.mean();
        let var = self
            .run_means
            .iter()
            .map(|m| (m - mean) * (m - mean))
            .sum::<f64>()
            / self.run_means.len() as f64;
        var.sqrt()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    /// Binary version the point was computed with. A checkpoint from a
    /// different build is ignored rather than trusted, since the config
    /// hash cannot see code changes.
    #[serde(default)]
    tool_version: String,
    runs: usize,
    episodes: usize,
    run_means: Vec<f64>,
}

/// Runs grid points over a fixed paired seed list, checkpointing each
/// finished point under `ckpt_dir` when one is set.
pub struct PointRunner<'a> {
    pub base_hash: &'a str,
    pub seeds: &'a [u64],
    pub runs: usize,
    pub episodes: usize,
    pub jobs: Option<usize>,
    pub ckpt_dir: Option<PathBuf>,
}

impl PointRunner<'_> {
    fn checkpoint_path(&self, point: &GridPoint) -> Option<PathBuf> {
        self.ckpt_dir.as_ref().map(|dir| {
            dir.join(format!(
                "{}-{}-{}-{}.json",
                self.base_hash, point.axis, point.value, point.method
            ))
        })
    }

    fn load_checkpoint(&self, point: &GridPoint) -> Option<PointResult> {
        let path = self.checkpoint_path(point)?;
        let text = std::fs::read_to_string(path).ok()?;
        let file: CheckpointFile = serde_json::from_str(&text).ok()?;
        (file.tool_version == TOOL_VERSION
            && file.runs == self.runs
            && file.episodes == self.episodes)
            .then_some(PointResult { run_means: file.run_means })
    }

    fn save_checkpoint(&self, point: &GridPoint, result: &PointResult) -> Result<()> {
        let Some(path) = self.checkpoint_path(point) else {
            return Ok(());
        };
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let file = CheckpointFile {
            tool_version: TOOL_VERSION.to_string(),
            runs: self.runs,
            episodes: self.episodes,
            run_means: result.run_means.clone(),
        };
        std::fs::write(&path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn run_point(&self, point: &GridPoint) -> Result<PointResult> {
        if let Some(done) = self.load_checkpoint(point) {
            eprintln!(
                "{}={} {}: resumed from checkpoint",
                point.axis, point.value, point.method
            );
            return Ok(done);
        }
        if self.seeds.len() != self.runs * self.episodes {
            return Err(Error::state("seed list does not cover runs x episodes"));
        }
        let outcomes = run_batch(&point.config, self.seeds, self.jobs)?;
        let run_means = (0..self.runs)
            .map(|r| {
                let run = &outcomes[r * self.episodes..(r + 1) * self.episodes];
                run.iter().filter(|o| o.success).count() as f64 / self.episodes as f64
            })
            .collect();
        let result = PointResult { run_means };
        self.save_checkpoint(point, &result)?;
        eprintln!(
            "{}={} {}: mean_success={:.3}",
            point.axis,
            point.value,
            point.method,
            result.mean()
        );
        Ok(result)
    }
}

/// Write the grid results as CSV with a metadata preamble. Floats print in
/// shortest-roundtrip form, so equal inputs give equal bytes.
pub fn write_grid_csv(
    out: &mut dyn Write,
    command: &str,
    base_hash: &str,
    master_seed: u64,
    seed_tag: &str,
    runs: usize,
    episodes: usize,
    rows: &[(GridPoint, PointResult)],
) -> Result<()> {
    writeln!(out, "# dreamplan {command}")?;
    writeln!(out, "# tool_version={TOOL_VERSION}")?;
    writeln!(out, "# config_hash={base_hash}")?;
    writeln!(out, "# master_seed={master_seed}")?;
    writeln!(
        out,
        "# episode_seeds=derive(master_seed, \"{seed_tag}\", run * {episodes} + episode)"
    )?;
    writeln!(out, "axis,value,method,mean_success,std_success,runs,episodes")?;
    for (point, result) in rows {
        writeln!(
            out,
            "{},{},{},{},{},{runs},{episodes}",
            point.axis,
            point.value,
            point.method,
            result.mean(),
            result.std()
        )?;
    }
    Ok(())
}

/// Write to the file at `out`, or stdout when none is given.
pub fn write_to_out(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(path) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
            write(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    }
}

/// Format a grid value the same way everywhere: shortest roundtrip, with
/// whole numbers printed bare.
pub fn format_value(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_std_over_run_means() {
        let r = PointResult { run_means: vec![0.2, 0.4, 0.6] };
        assert!((r.mean() - 0.4).abs() < 1e-15);
        let expected = (2.0_f64 / 3.0 * 0.04).sqrt();
        assert!((r.std() - expected).abs() < 1e-15);
    }

    #[test]
    fn whole_numbers_print_bare() {
        assert_eq!(format_value(1.0), "1");
        assert_eq!(format_value(0.04), "0.04");
    }
}
