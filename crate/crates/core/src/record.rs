//! Episode records: a JSONL file with one header line, one line per
//! executed step, optional candidate dumps, and a final outcome line.
//!
//! Records hold no wall-clock data, so a file written twice from the same
//! seed and config is byte-identical.

use crate::config::EnvConfig;
use crate::dris::DistStats;
use crate::error::{Error, Result};
use crate::state::StateVector;
use crate::task::Action;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Everything logged about one executed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepEntry {
    /// Timestep the action was taken at.
    pub t: u64,
    /// The object observation behind this action, present only at steps
    /// where a fresh observation was taken.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<StateVector>,
    /// Summary stats of the belief the planner acted from, when it planned
    /// at this step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief: Option<DistStats>,
    pub action: Action,
    /// Summary stats of the predicted next belief for the chosen action,
    /// absent when the planner skipped prediction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<DistStats>,
    /// True state after the action was applied.
    pub true_state: StateVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cage_cost: Option<f64>,
    pub valid: bool,
}

/// One candidate batch, logged per planning step when candidate logging
/// is on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateEntry {
    pub t: u64,
    pub actions: Vec<Action>,
    pub total_cost: Vec<f64>,
    pub valid: Vec<bool>,
    pub chosen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "line", rename_all = "snake_case", deny_unknown_fields)]
pub enum RecordLine {
    Header {
        tool_version: String,
        config_hash: String,
        episode_seed: u64,
        config: EnvConfig,
    },
    Step(StepEntry),
    Candidates(CandidateEntry),
    Outcome {
        success: bool,
        steps: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean_cage_cost: Option<f64>,
    },
}

/// Streams record lines to a file as JSONL.
pub struct RecordWriter<W: Write> {
    out: W,
}

impl RecordWriter<BufWriter<std::fs::File>> {
    pub fn create(path: &Path) -> Result<Self> {
        let file = std::fs::File::create(path)?;
        Ok(Self { out: BufWriter::new(file) })
    }
}

impl<W: Write> RecordWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write(&mut self, line: &RecordLine) -> Result<()> {
        serde_json::to_writer(&mut self.out, line)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Reads a whole record file back.
pub fn read_record(path: &Path) -> Result<Vec<RecordLine>> {
    let file = std::fs::File::open(path)?;
    let mut lines = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let parsed: RecordLine = serde_json::from_str(&line).map_err(|e| {
            Error::config(format!("{}:{}", path.display(), index + 1), e.to_string())
        })?;
        lines.push(parsed);
    }
    Ok(lines)
}

/// The executed action sequence of a recorded episode, in step order.
pub fn recorded_actions(lines: &[RecordLine]) -> Vec<Action> {
    lines
        .iter()
        .filter_map(|line| match line {
            RecordLine::Step(step) => Some(step.action),
            _ => None,
        })
        .collect()
}

/// The true state sequence of a recorded episode, in step order.
pub fn recorded_states(lines: &[RecordLine]) -> Vec<StateVector> {
    lines
        .iter()
        .filter_map(|line| match line {
            RecordLine::Step(step) => Some(step.true_state),
            _ => None,
        })
        .collect()
}
