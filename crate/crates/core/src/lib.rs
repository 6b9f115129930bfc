//! Quantifying and easing the quantum Monte Carlo sign problem of real spin
//! Hamiltonians.
//!
//! A Hamiltonian matrix is *stoquastic* in a given basis when all of its
//! off-diagonal entries are non-positive; world-line Monte Carlo then samples
//! a genuine probability distribution and no sign problem occurs. This crate
//! provides the pieces needed to measure how far a Hamiltonian is from
//! stoquastic and to reduce that distance by changing the local basis:
//!
//! - [`hamiltonian`]: dense operators, Pauli embeddings, translation-invariant
//!   chains, 2-local coefficient Hamiltonians, and on-site orthogonal
//!   conjugation.
//! - [`models`]: the model zoo (Heisenberg ladders in a dimer basis, the
//!   sign-free and fine-tuned case-study Hamiltonians, random instances with
//!   a known stoquastic basis).
//! - [`measures`]: the non-stoquasticity measures `nu_p`, their closed form
//!   for 2-local Hamiltonians, a Rademacher sampling estimator for
//!   high-degree vertices, the translation-invariant effective measure, and
//!   its smooth surrogate.
//! - [`qmc`]: exact (trace-based) evaluation of the transfer matrix, the
//!   average sign, the relative-variance proxy, and the negative-path
//!   decomposition.
//! - [`optimizer`]: conjugate-gradient minimization of non-stoquasticity
//!   objectives over the orthogonal group `O(d)` of on-site basis changes.
//! - [`hardness`]: the MaxCut embedding whose sign-easing optimum encodes the
//!   Ising ground-state energy, with brute-force verifiers for small graphs.
//!
//! All operations are pure functions of immutable inputs; every randomized
//! constructor takes an explicit seed and is deterministic given it.

pub mod error;
pub mod hamiltonian;
pub mod hardness;
pub mod linalg;
pub mod measures;
pub mod models;
pub mod optimizer;
pub mod qmc;

pub use error::{Error, Result};
pub use hamiltonian::{
    ChainSpec, CoefficientGraph, DenseOperator, OrthogonalPoint, Pauli, TwoSiteTerm,
};
pub use hardness::{CliffordAssignment, EmbeddedInstance, MaxCutInstance};
pub use measures::{EstimatorBudget, MeasureSpec, Normalization};
pub use models::{LadderModel, LadderParams};
pub use optimizer::{Init, ObjectiveKind, ObjectiveSpec, OptimizerConfig, OptimizerTrace};
pub use qmc::QmcParams;

/// Default cap on dense Hamiltonian construction, in qubits.
///
/// 2^14 = 16384 rows is the largest dense matrix that is still comfortable
/// on a workstation; every shipped experiment needs at most 8 spin-1/2 sites.
pub const DENSE_QUBIT_LIMIT: usize = 14;
