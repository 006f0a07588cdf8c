//! Command implementations behind the `dreamplan` binary.

pub mod ablate;
pub mod args;
pub mod common;
pub mod episode;
pub mod points;
pub mod profile;
pub mod run;
pub mod sweep;
