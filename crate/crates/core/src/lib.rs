//! Normal discrete kinetic models of Boltzmann-type equations.
//!
//! The crate builds velocity sets and reaction tables ([`model`]), attaches
//! an interaction law ([`interaction`]), integrates the resulting ODE system
//! while tracking the conserved quantities and the H-functional
//! ([`dynamics`]), solves for stationary states ([`equilibrium`]) and
//! assembles lattice quadratures of the continuum collision operator
//! ([`quadrature`]). Number-theoretic plumbing lives in [`lattice`].

// index loops mirror the formulas in the numerical kernels
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod dynamics;
pub mod equilibrium;
pub mod interaction;
pub mod lattice;
pub mod model;
pub mod quadrature;
