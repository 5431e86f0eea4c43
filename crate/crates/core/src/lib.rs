//! Spectral toolkit for the Landau Hamiltonian under periodic and random
//! magnetic perturbations.
//!
//! The periodic case is reduced to one-dimensional fiber operators in the
//! oscillator basis ([`fiber`]); the splitting of each Landau level is
//! decided in closed form from the Fourier data of the profile
//! ([`splitting`]). The random case is studied on a finite box through a
//! link-phase discretization ([`random_field`]) and the projection
//! commutator trace for the Hall conductance ([`chern`]).

pub mod chern;
pub mod config;
pub mod eigen;
pub mod error;
pub mod fiber;
pub mod format;
pub mod profile;
pub mod quadrature;
pub mod random_field;
pub mod selftest;
pub mod specfun;
pub mod splitting;

pub use error::{Error, Result};
pub use profile::{Harmonic, PeriodicProfile, ProfileSpec};
