use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] wqed_core::Error),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// 2 config, 3 physics, 4 numerics, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use wqed_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                E::InvalidParameter(_) | E::EmptyBand => 2,
                E::NonPhysicalShape { .. }
                | E::SingularControl { .. }
                | E::Unreachable { .. }
                | E::DegenerateDressing { .. } => 3,
                E::NormViolation { .. } | E::GridTooCoarse { .. } | E::GridMismatch { .. } | E::ScheduleGap { .. } => 4,
            },
        }
    }
}
