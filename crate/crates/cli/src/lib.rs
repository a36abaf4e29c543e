//! Command-line harness for `zeno-core`: JSON configs in, deterministic CSV
//! and a reproducing manifest out.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use app::{main_with_args, Cli};
pub use commands::{execute, Request, RunManifest, SweepParam, SweepSpec};
pub use error::{CliError, Result};
