//! Experiment driver: configuration parsing and the `run`, `spectrum`,
//! `stability`, `converge` and `suolson` commands.

pub mod config;
pub mod experiments;

pub use config::{parse_config, ConfigError, RunConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Core(#[from] kinproj_core::Error),

    /// Finite but unbounded growth of the density.
    #[error("{what} diverged: max |rho| grew by {ratio:.3e} by t = {t}")]
    Blowup { what: String, t: f64, ratio: f64 },
}

impl CliError {
    /// Process exit status: 2 configuration, 3 divergence, 4 I/O, 5 cost ceiling.
    pub fn exit_code(&self) -> i32 {
        use kinproj_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Blowup { .. } => 3,
            CliError::Core(e) => match e {
                E::InvalidParameter(_) | E::Config(_) | E::LengthMismatch { .. } => 2,
                E::Diverged { .. } => 3,
                E::Io(_) => 4,
                E::CostCeiling { .. } => 5,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(kinproj_core::Error::Io(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
