//! Command implementations behind the `ni-swarm` binary. Each command
//! writes its report to the given writer and returns an exit code.

pub mod check;
pub mod compare;
pub mod metrics;
pub mod simulate;

use std::fmt;
use std::io::Write;

/// Stable exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad model, config or trace contents.
    Input(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "i/o: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ni_swarm::Error> for CliError {
    fn from(e: ni_swarm::Error) -> Self {
        match e {
            ni_swarm::Error::Io(m) => CliError::Io(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn read_file(path: &std::path::Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn write_json(
    out: &mut dyn Write,
    v: &impl serde::Serialize,
    pretty: bool,
) -> CliResult<()> {
    let s = if pretty {
        serde_json::to_string_pretty(v)
    } else {
        serde_json::to_string(v)
    }
    .map_err(|e| CliError::Input(e.to_string()))?;
    writeln!(out, "{s}")?;
    Ok(())
}
