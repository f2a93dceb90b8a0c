//! Continuous data assimilation and point nudging for two-dimensional
//! Bénard convection on a staggered channel grid.
//!
//! The [`solver`] advances the Boussinesq equations with Adams–Bashforth
//! advection, backward-Euler diffusion and a pressure projection, using the
//! FFT/tridiagonal solvers in [`elliptic`]. [`assimilation`] turns coarse
//! observations of a reference run into nudging tendencies, and
//! [`experiments`] runs twin experiments and the scenario catalog.

pub mod assimilation;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod solver;

pub use error::{Error, Result, Stage};
