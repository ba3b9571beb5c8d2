//! Library side of the `sphere-oep` command-line tool: argument parsing
//! helpers, the golden-value store, parameter sweeps and the full
//! verification suite.

pub mod app;
pub mod golden;
pub mod params;
pub mod sweep;
pub mod verify_all;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Error type of the front end. Core errors and I/O problems are folded into
/// a message.
#[derive(Debug)]
pub struct CliError(pub String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<sphere_oep::Error> for CliError {
    fn from(e: sphere_oep::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
