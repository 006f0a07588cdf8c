//! Planning under parameter and pose uncertainty, desk scale.
//!
//! The crate wires five pieces together: randomized instance sets ([`dris`]),
//! batched analytic forward prediction ([`tsip`], [`stepper`]), declarative
//! constraint regions ([`cage`]), sampling-based action selection
//! ([`solver`]), and a perturbable ground-truth executor ([`executor`]), all
//! orchestrated by [`env`]. Every random draw flows through seeded ChaCha8
//! streams ([`seed`]), so identical seeds reproduce identical episodes byte
//! for byte.

pub mod cage;
pub mod config;
pub mod context;
pub mod dris;
pub mod env;
pub mod error;
pub mod executor;
pub mod policy;
pub mod record;
pub mod seed;
pub mod solver;
pub mod state;
pub mod stepper;
pub mod task;
pub mod tsip;

pub use error::{Error, Result};
