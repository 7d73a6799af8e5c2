//! Command-line front end: configuration parsing and the subcommands,
//! including the figure reproductions.

pub mod config;
pub mod runs;

pub use config::{Command, Format, RunConfig, Threads};
pub use runs::{run, Check, Outcome};
