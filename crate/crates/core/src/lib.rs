//! Spectral toolkit for periodic quantum graphs: single-edge spectral
//! functions at complex energy, Floquet dispersion determinants as exact
//! Laurent polynomials, bilayer couplings, and the reducibility machinery
//! built on the spectral asymmetry function.

pub mod cli;
pub mod edge_spectral;
pub mod error;
pub mod floquet;
pub mod graph_model;
pub mod laurent;
pub mod numerics;
pub mod potential;
pub mod reducibility;
pub mod riemann;

pub use error::{Error, Result};
pub use numerics::{c64, Matrix2, Region, C64};
pub use potential::{Potential, PotentialKind};
