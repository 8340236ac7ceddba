//! Command-line experiments around the `setmatch` library: dataset
//! generation, training, bound reports, the `(m, alpha)` sweep and coverage
//! trials. Every command is deterministic given the master seed, whatever the
//! thread count.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod output;

pub use cli::{run, Cli, Command, Outcome};
pub use config::RunConfig;
pub use error::{HarnessError, Result};
