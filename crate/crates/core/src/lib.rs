//! Finite-dimensional calculus for linear relations.
pub mod domination;
pub mod error;
pub mod invariants;
pub mod limits;
pub mod linalg;
mod psd;
pub mod random;
pub mod relation;
pub mod scenario;

pub use error::{RelError, Result};
pub use linalg::{Matrix, Subspace, Tol, Vector};
