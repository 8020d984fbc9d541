use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] epcavity::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Bad input exits 1, numerical breakdown exits 2.
    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "numeric" => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        use epcavity::Error as E;
        match self {
            CliError::Config(_) => "validation",
            CliError::Io { .. } => "io",
            CliError::Model(e) => match e {
                E::Domain { .. } | E::InfeasibleCoupling { .. } | E::ConstraintViolation { .. } | E::ZeroDrive => {
                    "validation"
                }
                E::Classification(_)
                | E::Pole { .. }
                | E::NotConverged { .. }
                | E::Stability { .. }
                | E::Prediction(_) => "numeric",
            },
        }
    }
}
