//! Exact diagonalization of two electrons with contact repulsion in a
//! one-dimensional two-center power-exponential confinement, and the
//! spatial-entanglement observables of the resulting ground state.

pub mod basis;
pub mod cli;
pub mod config;
pub mod error;
pub mod hamiltonian;
pub mod observables;
pub mod oracle;
pub mod potential;
pub mod quadrature;
pub mod sweep;

pub use error::{Error, Result};
