//! Numerical probes of the harmonic-extension identity and the
//! Gagliardo-Nirenberg / commutator inequalities.

use rustfft::num_complex::Complex64;

use super::ops::{derivative, frac_deriv, half_norm_sq, hilbert};
use super::quadrature::gauss_legendre;
use super::Field;
use crate::error::{invalid, Result};
use crate::profiles::{phi_prime, WeightParams};

/// Both sides of the harmonic-extension identity
/// `∫(Hu_x) u φ' = -∬|∇U|² Φ + ½∫u² Hφ''`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenIdentity {
    pub lhs: f64,
    pub bulk: f64,
    pub boundary: f64,
}

impl GreenIdentity {
    pub fn rhs(&self) -> f64 {
        -self.bulk + self.boundary
    }

    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs()).abs()
    }
}

/// Evaluates both sides of the Green identity for the weight `φ_A`.
///
/// `U` and `Φ` are the periodic harmonic extensions of `u` and of the sampled
/// `φ'`. The half-plane integral is truncated at `y_max` and integrated with
/// `n_layers` Gauss-Legendre nodes in the variable `ln(1 + y)`.
pub fn green_identity(u: &Field, a: f64, y_max: f64, n_layers: usize) -> Result<GreenIdentity> {
    if !(y_max > 0.0 && y_max.is_finite()) {
        return Err(invalid("y_max", format!("must be positive, got {y_max}")));
    }
    if n_layers == 0 {
        return Err(invalid("n_layers", "must be positive"));
    }
    let g = u.grid();
    let dphi = phi_prime(&WeightParams::new(a, 0.0)?, g);
    let u_x = derivative(u, 1);
    let lhs = (&hilbert(&u_x) * u).inner(&dphi);
    let boundary = 0.5 * (u * u).inner(&hilbert(&derivative(&dphi, 1)));

    let u_hat = u.spectrum();
    let p_hat = dphi.spectrum();
    let ks = g.wavenumbers();
    let nyq = g.nyquist_index();
    let s_max = y_max.ln_1p();
    let (nodes, weights) = gauss_legendre(n_layers);
    let mut bulk = 0.0;
    for (s, w) in nodes.iter().zip(&weights) {
        let s = 0.5 * s_max * (s + 1.0);
        let y = s.exp_m1();
        let jac = 0.5 * s_max * (1.0 + y);
        let mut ux = vec![Complex64::new(0.0, 0.0); g.n()];
        let mut uy = ux.clone();
        let mut ph = ux.clone();
        for m in 0..g.n() {
            let k = ks[m];
            let damp = (-y * k.abs()).exp();
            let c = u_hat[m] * damp;
            ux[m] = if m == nyq { Complex64::new(0.0, 0.0) } else { c * Complex64::new(0.0, k) };
            uy[m] = -c * k.abs();
            ph[m] = p_hat[m] * damp;
        }
        let ux = g.inverse(ux);
        let uy = g.inverse(uy);
        let ph = g.inverse(ph);
        let layer: f64 = (0..g.n()).map(|j| (ux[j] * ux[j] + uy[j] * uy[j]) * ph[j]).sum::<f64>() * g.spacing();
        bulk += w * jac * layer;
    }
    Ok(GreenIdentity { lhs, bulk, boundary })
}

/// Absolute discrepancy of [`green_identity`].
pub fn green_identity_residual(u: &Field, a: f64, y_max: f64, n_layers: usize) -> Result<f64> {
    Ok(green_identity(u, a, y_max, n_layers)?.residual())
}

/// `‖f‖²_{L⁴} / (‖f‖_{L²} ‖D^{1/2} f‖_{L²})`; zero for `f = 0`, infinite for
/// a nonzero constant.
pub fn gn_ratio(f: &Field) -> f64 {
    let l4_sq = f.map(|v| v.powi(4)).integral().sqrt();
    if l4_sq == 0.0 {
        return 0.0;
    }
    let denom = f.l2_norm() * half_norm_sq(f).sqrt();
    if denom == 0.0 {
        f64::INFINITY
    } else {
        l4_sq / denom
    }
}

/// Fractional order of the commutator estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommutatorOrder {
    Half,
    One,
}

impl CommutatorOrder {
    pub fn exponent(self) -> f64 {
        match self {
            CommutatorOrder::Half => 0.5,
            CommutatorOrder::One => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutatorDefect {
    /// `‖D^s(fg) - g D^s f‖_{L²}`.
    pub numerator: f64,
    /// `‖f‖_{L⁴} ‖D^s g‖_{L⁴}`.
    pub denominator: f64,
}

impl CommutatorDefect {
    /// Ratio with `0/0` read as 0.
    pub fn ratio(&self) -> f64 {
        if self.numerator == 0.0 {
            0.0
        } else {
            self.numerator / self.denominator
        }
    }
}

pub fn commutator_defect(f: &Field, g: &Field, order: CommutatorOrder) -> Result<CommutatorDefect> {
    f.ensure_same_grid(g)?;
    let s = order.exponent();
    let dfg = frac_deriv(&(f * g), s)?;
    let df = frac_deriv(f, s)?;
    let dg = frac_deriv(g, s)?;
    let numerator = (&dfg - &(g * &df)).l2_norm();
    let l4 = |h: &Field| h.map(|v| v.powi(4)).integral().powf(0.25);
    Ok(CommutatorDefect { numerator, denominator: l4(f) * l4(&dg) })
}
