//! Batch front end: configuration, mode dispatch and artifact output.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod verify;

pub use config::{Mode, RunConfig};
pub use error::{exit, CliError};
pub use run::{execute, Invocation};
