//! File formats, experiment commands and CLI plumbing around `minsubfi-core`.
//!
//! * [`io`]: `.demos.jsonl`, `.policy.json` and `.featnet.json` files.
//! * [`config`]: the flat JSON run configuration.
//! * [`commands`]: one function per subcommand, each writing CSV reports and a
//!   run manifest.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod table;

pub use error::{CliError, Result};
