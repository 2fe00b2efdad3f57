//! Eigenstates of spin-1/2 Richardson-Gaudin models in an arbitrary field.
//!
//! The commuting charges `R_i` are built matrix-free ([`spin_algebra`]),
//! their joint eigenvalues come from a quadratic system solved by
//! continuation in the coupling ([`bethe_solver`]), and eigenstates are
//! obtained by applying an operator-valued determinant to a reference state
//! ([`projector`]). [`oracle`] diagonalises the charges densely for
//! cross-checks.

pub mod bethe_solver;
pub mod cli;
pub mod io;
pub mod model;
pub mod oracle;
pub mod projector;
pub mod spin_algebra;

pub use bethe_solver::{homotopy_solve, EigenvalueVector, SignPattern, SolutionSet};
pub use model::{build_couplings, Couplings, ModelSpec};
pub use projector::{ProjectorEngine, Strategy};
pub use spin_algebra::{charges, ChargeOperator, StateVector};
