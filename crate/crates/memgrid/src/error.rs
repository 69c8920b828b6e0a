//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by lattice construction, solving, simulation and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Configuration or precondition violation; the message names the offending field.
    #[error("config: {0}")]
    Config(String),

    /// Source and sink are not part of the same connected component.
    #[error("no circuit: {0}")]
    NoCircuit(String),

    /// The linear solve failed (singular or non-finite system).
    #[error("solver: {0}")]
    Solver(String),

    /// An operation was called with inputs outside its contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Simulation-level failure (diverging run, undefined observable).
    #[error("simulation: {0}")]
    Simulation(String),

    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the CLI: 1 config, 2 simulation, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) => 1,
            Error::NoCircuit(_) | Error::Solver(_) | Error::Simulation(_) => 2,
            Error::Io { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
