use std::fmt::Display;

/// Failure of a subcommand, attributed to the stage that raised it.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, config or input files. Exit code 1.
    Invalid { stage: &'static str, msg: String },
    /// Anything that goes wrong after the inputs were accepted. Exit code 2.
    Failed { stage: &'static str, msg: String },
}

impl CliError {
    pub fn invalid(stage: &'static str, msg: impl Display) -> Self {
        CliError::Invalid { stage, msg: msg.to_string() }
    }

    pub fn failed(stage: &'static str, msg: impl Display) -> Self {
        CliError::Failed { stage, msg: msg.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid { .. } => 1,
            CliError::Failed { .. } => 2,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid { stage, msg } => write!(f, "{stage}: invalid input: {msg}"),
            CliError::Failed { stage, msg } => write!(f, "{stage}: {msg}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait Stage<T> {
    fn invalid(self, stage: &'static str) -> CliResult<T>;
    fn failed(self, stage: &'static str) -> CliResult<T>;
}

impl<T, E: Display> Stage<T> for Result<T, E> {
    fn invalid(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| CliError::invalid(stage, e))
    }

    fn failed(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| CliError::failed(stage, e))
    }
}
