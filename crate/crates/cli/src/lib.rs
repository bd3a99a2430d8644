//! Command-line front end for the curved-tube solver.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

pub use config::RunConfig;
pub use error::CliError;
