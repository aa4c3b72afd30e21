//! Configuration, orchestration and deterministic reports for the `sigmaflow` command.

pub mod config;
pub mod error;
pub mod run;

pub use config::{Kind, RunConfig};
pub use error::{Result, RunError};
pub use run::{execute, Artifact, Outcome};
