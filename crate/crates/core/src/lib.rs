//! Numerical workbench for finite-dimensional operator algebras.
//!
//! Everything lives inside a matrix algebra `M_d` (or a block direct sum
//! `⊕_k M_{n_k}` realized block-diagonally inside `M_d`). The crate computes
//! generated (*-/triple) algebras, Wedderburn block structure, C*-envelopes
//! via boundary-ideal search, complete-isometry/positivity certificates for
//! linear maps, the logmodularity ladder, and trace-preserving conditional
//! expectations onto diagonals of subalgebras.
//!
//! Certification is tri-state throughout: `Certified` carries the feasible
//! object (e.g. a Choi matrix), `Refuted` carries a concrete re-checkable
//! witness, and `Inconclusive` is surfaced verbatim — no caller silently
//! converts it to a pass or a fail.

pub mod envelope;
pub mod error;
pub mod expectation;
pub mod isometry;
pub mod linalg;
pub mod logmod;
pub mod map;
pub mod positivity;
pub mod structure;
pub mod subspace;

pub use error::OpalgError;
pub use linalg::{CMat, Tolerance};
pub use map::SubspaceMap;
pub use positivity::{Certificate, Verdict, Witness};
pub use subspace::{GeneratorMode, GeneratorSet, Subspace};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, OpalgError>;
