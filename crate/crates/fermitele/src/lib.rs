//! Desk-scale simulator for fermionic states in Fock space.
//!
//! Everything is built on sparse superpositions of Slater determinants over
//! at most 64 spin-orbitals: single-particle basis rotations, one-body and
//! density-density time evolution, projective measurements that track every
//! branch, and the mode/particle entanglement measures needed to analyse
//! electronic teleportation protocols end to end.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod measurement;
pub mod protocols;
pub mod scenario;

mod book;

pub use error::{Error, Result};
pub use fock::{OrbitalPartition, OrbitalUnitary, PureState, SlaterDeterminant, C64};
