//! Permutation dynamics of small Ising spin chains and their quantum lift.
//!
//! The three-spin chain evolves by the cyclic permutation `Û = P12 P23`.
//! This crate builds that operator combinatorially and from Pauli matrices,
//! constructs its Hamiltonian, checks the finite exponential identities it
//! satisfies, and measures how perturbed versions of it turn ontological
//! basis states into superpositions. A sinc-series module links the discrete
//! automaton time step to continuous time.

pub mod error;
pub mod permops;
pub mod perturb;
pub mod sampling;
pub mod spectral;
pub mod statespace;
pub mod verify;

pub use error::{Error, Result};
