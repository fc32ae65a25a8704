//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the toolkit.
///
/// The variants are grouped by how the command-line runner maps them to exit
/// codes: configuration problems exit with 2, resolution/window problems with
/// 3, and property violations (which are reported, not raised) with 1.
#[derive(Debug, Error)]
pub enum Error {
    /// A geometric input is degenerate (empty interior, zero volume, ...).
    #[error("degenerate body: {0}")]
    DegenerateBody(String),

    /// An input fails a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested computation cannot be represented at the grid
    /// resolution (mesh too deep, epsilon below one cell, ...).
    #[error("resolution insufficient: {0}")]
    Resolution(String),

    /// A configuration file could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure while reading configs or writing reports.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
