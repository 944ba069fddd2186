use std::fmt;
use std::process::ExitCode;

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad settings, unreadable input, or failure to write output (exit 1).
    Config(String),
    /// The box model hit `N = 0` (exit 2).
    Degenerate(String),
    /// No self-similar profile exists for the requested `k0` (exit 3).
    NoBranch(String),
    /// An iterative solver did not converge (exit 4).
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 1,
            CliError::Degenerate(_) => 2,
            CliError::NoBranch(_) => 3,
            CliError::NonConvergence(_) => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Degenerate(m) => write!(f, "degenerate state: {m}"),
            CliError::NoBranch(m) => write!(f, "no self-similar solution: {m}"),
            CliError::NonConvergence(m) => write!(f, "no convergence: {m}"),
        }
    }
}

impl From<maxagg::Error> for CliError {
    fn from(e: maxagg::Error) -> Self {
        use maxagg::Error as E;
        match e {
            E::InvalidArgument(_) | E::InsufficientData(_) | E::DisjointSupport => CliError::Config(e.to_string()),
            E::Degenerate { .. } => CliError::Degenerate(e.to_string()),
            E::NoBranch { k0 } => CliError::NoBranch(format!(
                "k0 = {k0} is below 2; in this regime solutions settle in the original variables instead"
            )),
            E::NonConvergence { .. }
            | E::ConvergenceFailure { .. }
            | E::BracketFailure { .. }
            | E::SingularPoint { .. } => CliError::NonConvergence(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(format!("csv: {e}"))
    }
}
