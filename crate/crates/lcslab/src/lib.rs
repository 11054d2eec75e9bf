//! Exact computational toolkit for locally conformally symplectic (LCS)
//! geometry.
//!
//! The symbolic layer works over a polynomial-exponential coefficient algebra
//! with arbitrary-precision rational data, so structure equations, twisted
//! differentials and integral invariants come out bit-exact. Two independent
//! cohomology engines are provided: an exact Chevalley-Eilenberg complex for
//! invariant data and a discrete twisted Hodge theory on periodic grids.

pub mod ce;
pub mod coeff;
pub mod dynamics;
pub mod form;
pub mod lattice;
pub mod lcs;
pub mod linalg;
pub mod manifest;
pub mod report;
pub mod run;
pub mod scalar;

use thiserror::Error;

/// Errors shared across the symbolic and numeric engines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("axis {0} out of range for dimension {1}")]
    AxisOutOfRange(usize, usize),
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("affine map is singular")]
    SingularMap,
    #[error("1-form is not closed; twisted differential undefined")]
    LeeNotClosed,
    #[error("2-form is degenerate")]
    Degenerate,
    #[error("Pfaffian is not a unit term; symbolic inversion unavailable")]
    NonUnitPfaffian,
    #[error("division by a non-unit coefficient function")]
    NonUnitDivisor,
    #[error("Jacobi identity fails for bracket ({i},{j},{k})")]
    JacobiViolation { i: usize, j: usize, k: usize },
    #[error("input is not a cocycle")]
    NotACocycle,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
