//! Configuration-driven runs of the Morse decoherence model.

pub mod calibrate;
pub mod config;
pub mod error;
pub mod scenario;
pub mod sweep;

pub use config::{ScenarioConfig, SweepConfig};
pub use error::CliError;
