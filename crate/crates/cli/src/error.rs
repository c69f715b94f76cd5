use std::fmt;

/// A failure mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed input file or flag value (exit 2).
    Input(String),
    /// Well-formed input the statistics cannot use (exit 3).
    Domain(String),
    /// Could not write output (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Input(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Domain(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<hsdcov::Error> for CliError {
    fn from(e: hsdcov::Error) -> Self {
        use hsdcov::Error as E;
        match e {
            E::Replication { source, .. } => (*source).into(),
            E::InvalidParameter(_) | E::InvalidBandwidth(_) | E::EmptyInput => CliError::Input(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
