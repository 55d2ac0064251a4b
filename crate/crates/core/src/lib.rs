//! Ray-optics Casimir energies and forces between two metal squares that
//! sit between two parallel metal sidewalls, in two dimensions.
//!
//! Energies are sums over closed specular loops of `−(1/4π)∫d²x/ℓ³`
//! (`ħc = 1`). Loops with an even number of reflections off both wall
//! families are closed forms; the odd ones are integrated numerically.

pub mod assembly;
pub mod channels;
pub mod error;
pub mod even;
pub mod geometry;
pub mod lattice;
pub mod numerics;
pub mod odd;
pub mod piston;
pub mod quadrature;

pub use channels::{
    central_difference, force_from_energies, pfa_energy, pfa_force, to_polarizations, EnergyBreakdown,
    ForceBreakdown, NormalizedForces, Parity, PathClass, Polarizations, ZETA3,
};
pub use error::{Error, Result};
pub use geometry::{Geometry, Point};
