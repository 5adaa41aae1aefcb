//! Command-line front end: synthetic data generation, benchmark runs from
//! configuration files, report tables and distribution inspection.

pub mod config;
pub mod error;
pub mod gen_data;
pub mod inspect;
pub mod report;
pub mod results;
pub mod run;

pub use config::RunConfig;
pub use error::{CliError, CliResult, ExitStatus};

/// Progress messages on standard error, silenced by `--quiet`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Progress {
    pub quiet: bool,
}

impl Progress {
    pub fn line(&self, message: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", message.as_ref());
        }
    }
}
