//! Pseudospectral laboratory for the Benjamin-Ono equation
//! `u_t + H u_xx + u u_x = 0` on a periodic interval standing in for the line.
//!
//! Modules are layered bottom-up: [`spectral`] (grids, fields, Fourier
//! multipliers), [`profiles`] (closed forms), [`linops`] (linearized operators
//! and spectra), [`evolution`] (time stepping), [`modulation`] (soliton
//! decomposition), [`monitors`] (weighted-mass and virial diagnostics) and
//! [`lab`] (configuration, persistence, experiments).

pub mod error;
pub mod evolution;
pub mod lab;
pub mod linops;
pub mod modulation;
pub mod monitors;
pub mod profiles;
pub mod spectral;

pub use error::{BoError, Result};
pub use spectral::{Field, Grid};
