//! Writes the default config files into a directory (default `configs/`).
//!
//!     cargo run -p dreamplan-cli --example gen_configs [dir]

use dreamplan_core::config::{EnvConfig, SweepAxis, SweepSpec};
use dreamplan_core::task::TaskId;
use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "configs".to_string())
        .into();
    std::fs::create_dir_all(&dir)?;

    let mut files: Vec<(&str, EnvConfig)> = vec![
        ("push.json", EnvConfig::default_for(TaskId::PushToGoal)),
        ("follow.json", EnvConfig::default_for(TaskId::PushFollowCircle)),
        ("catch.json", EnvConfig::default_for(TaskId::CatchBall)),
    ];
    for axis in [SweepAxis::Noise, SweepAxis::Delay, SweepAxis::Severity] {
        let mut config = EnvConfig::default_for(TaskId::PushToGoal);
        config.sweep = Some(SweepSpec::default_for(axis));
        files.push((
            match axis {
                SweepAxis::Noise => "sweep-noise.json",
                SweepAxis::Delay => "sweep-delay.json",
                SweepAxis::Severity => "sweep-severity.json",
            },
            config,
        ));
    }

    for (name, config) in files {
        config.validate().expect("default config validates");
        let path = dir.join(name);
        let mut text = serde_json::to_string_pretty(&config).expect("serializes");
        text.push('\n');
        std::fs::write(&path, text)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
