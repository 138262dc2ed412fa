use thiserror::Error;

use crate::assembly::{AssemblyError, SolveError};
use crate::config::ConfigError;
use crate::discretize::DiscretizationError;
use crate::mesh::MeshError;
use crate::semilocal::SemiLocalError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error for everything that can go wrong between reading a case
/// and writing its results.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    SemiLocal(#[from] SemiLocalError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Study(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the failure is the user's input (bad config, bad geometry)
    /// rather than a numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Mesh(_))
    }
}
