//! Command-line front end for the `hatectx` library.

pub mod commands;
pub mod config;
pub mod files;

pub use commands::{run, Cli};

/// Exit status for bad configuration or unreadable inputs.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for failures while training or evaluating.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => e,
        }
    }
}

pub type Outcome = Result<(), Failure>;

pub(crate) trait FailureExt<T> {
    fn config(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> FailureExt<T> for Result<T, E> {
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}
