use std::fmt;
use std::path::{Path, PathBuf};

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, flags or input files: exit 2.
    Config(String),
    /// Error raised by the library.
    Core(shapgame::Error),
    /// An input file could not be read: exit 2.
    Input { path: PathBuf, source: std::io::Error },
    /// An output file could not be written: exit 3.
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn input(path: &Path, source: std::io::Error) -> Self {
        CliError::Input {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn output(path: &Path, source: std::io::Error) -> Self {
        CliError::Output {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input { .. } => 2,
            CliError::Output { .. } => 3,
            CliError::Core(e) => match e {
                shapgame::Error::Resource(_) => 3,
                shapgame::Error::Contract(_) => 1,
                _ => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input { path, source } => write!(f, "cannot read {}: {source}", path.display()),
            CliError::Output { path, source } => {
                write!(f, "cannot write {}: {source}", path.display())
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<shapgame::Error> for CliError {
    fn from(e: shapgame::Error) -> Self {
        CliError::Core(e)
    }
}
