//! Periodic grids, fields and Fourier-multiplier calculus.

mod grid;
pub mod ops;
pub mod probes;
pub mod quadrature;

pub use grid::{Field, Grid};
pub use ops::{
    abs_derivative, derivative, frac_deriv, half_norm_sq, helmholtz_smooth, hilbert, poisson_extension,
    sobolev_norm, spectral_inner, SobolevKind,
};
pub use probes::{
    commutator_defect, gn_ratio, green_identity, green_identity_residual, CommutatorDefect, CommutatorOrder,
    GreenIdentity,
};
