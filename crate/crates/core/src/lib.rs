//! Simulation of a nanomechanical resonator whose position modulates the flux
//! through a SQUID that forms part of a charge qubit.
//!
//! - [`hilbert`]: operators on qubit ⊗ truncated Fock space, matrix exponential, states.
//! - [`device`]: Josephson energies, bias classification and coupling constants.
//! - [`dynamics`]: Hamiltonians, closed evolution, spin-echo squeezing.
//! - [`lindblad`]: master-equation integration and the decoherence experiments.
//! - [`measure`]: generating-function readout and moment extraction.
//!
//! Units: ħ = 1, all energies are angular frequencies in rad/s, and positions
//! are expressed through the dimensionless quadrature x̂ = a + a†.

pub mod device;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod lindblad;
pub mod measure;
pub mod trajectory;

pub use error::{Error, Result};
