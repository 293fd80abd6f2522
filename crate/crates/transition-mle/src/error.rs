//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by estimation, root-finding, search, and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid count matrix: {0}")]
    InvalidCounts(String),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// A row with no observed transitions and no fully fixed mask row cannot
    /// be estimated.
    #[error("unidentifiable row {0}: zero row sum and no fixed row in mask")]
    UnidentifiableRow(usize),

    #[error("defective or near-defective: {0}")]
    Defective(String),

    #[error("no real root exists: {0}")]
    NoRealRoot(String),

    #[error("enumeration infeasible: {expected} real roots exceed budget {budget}")]
    EnumerationInfeasible { expected: u128, budget: u64 },

    #[error("gradient undefined at boundary")]
    GradientAtBoundary,

    #[error("store error: {0}")]
    Store(String),

    #[error("fingerprint mismatch: {0}")]
    FingerprintMismatch(String),

    #[error("empty report: no converged records")]
    EmptyReport,

    #[error("unknown figure id: {0}")]
    UnknownFigure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
