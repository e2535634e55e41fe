//! File formats and orchestration around `wave-core`: JSON configuration and
//! checkpoints, CSV path tables and profiles, and the run/resume driver used
//! by the `wave` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod config;
pub mod driver;
pub mod error;
pub mod output;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use error::{CliError, CliResult};
