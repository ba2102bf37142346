use rustfft::num_complex::Complex64;

use super::Field;
use crate::error::{invalid, Result};

/// Which Sobolev weight to use: `|k|^{2s}` or `(1 + k²)^s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SobolevKind {
    Homogeneous,
    Inhomogeneous,
}

/// Hilbert transform with symbol `+i sgn(k)`, so that `H cos = -sin`.
pub fn hilbert(f: &Field) -> Field {
    f.apply_symbol(|k| {
        let sgn = if k > 0.0 { 1.0 } else if k < 0.0 { -1.0 } else { 0.0 };
        Complex64::new(0.0, sgn)
    })
}

/// `D = |∂_x|`, the multiplier `|k|`.
pub fn abs_derivative(f: &Field) -> Field {
    f.apply_symbol(|k| Complex64::new(k.abs(), 0.0))
}

/// `D^s`, multiplier `|k|^s`; `s = 0` returns the input unchanged.
pub fn frac_deriv(f: &Field, s: f64) -> Result<Field> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("fractional order must be >= 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.apply_symbol(|k| Complex64::new(if k == 0.0 { 0.0 } else { k.abs().powf(s) }, 0.0)))
}

/// `∂_x^order`, multiplier `(ik)^order`; order 0 is the identity.
pub fn derivative(f: &Field, order: u32) -> Field {
    if order == 0 {
        return f.clone();
    }
    f.apply_symbol(|k| Complex64::new(0.0, k).powu(order))
}

pub fn sobolev_norm(f: &Field, s: f64, kind: SobolevKind) -> Result<f64> {
    if !(0.0..=2.0).contains(&s) {
        return Err(invalid("s", format!("Sobolev index must lie in [0, 2], got {s}")));
    }
    let spec = f.spectrum();
    let g = f.grid();
    let scale = g.length() / (g.n() as f64 * g.n() as f64);
    let sum: f64 = spec
        .iter()
        .zip(g.wavenumbers())
        .map(|(c, &k)| {
            let w = match kind {
                SobolevKind::Homogeneous if s == 0.0 => 1.0,
                SobolevKind::Homogeneous => k.abs().powf(2.0 * s),
                SobolevKind::Inhomogeneous => (1.0 + k * k).powf(s),
            };
            w * c.norm_sqr()
        })
        .sum();
    Ok((scale * sum).sqrt())
}

/// `‖D^{1/2} f‖²` computed on the spectral side.
pub fn half_norm_sq(f: &Field) -> f64 {
    let spec = f.spectrum();
    let g = f.grid();
    let scale = g.length() / (g.n() as f64 * g.n() as f64);
    scale * spec.iter().zip(g.wavenumbers()).map(|(c, &k)| k.abs() * c.norm_sqr()).sum::<f64>()
}

/// `(1 - γ∂²)^{-1} f`.
pub fn helmholtz_smooth(f: &Field, gamma: f64) -> Result<Field> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("gamma", format!("must be positive, got {gamma}")));
    }
    Ok(f.apply_symbol(|k| Complex64::new(1.0 / (1.0 + gamma * k * k), 0.0)))
}

/// Harmonic extension to height `y`: multiplier `e^{-y|k|}`.
pub fn poisson_extension(f: &Field, y: f64) -> Result<Field> {
    if !(y >= 0.0 && y.is_finite()) {
        return Err(invalid("y", format!("height must be >= 0, got {y}")));
    }
    if y == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.apply_symbol(|k| Complex64::new((-y * k.abs()).exp(), 0.0)))
}

/// `∫ f g` evaluated as `(L/n²) Σ f̂ conj(ĝ)`.
pub fn spectral_inner(f: &Field, g: &Field) -> Result<f64> {
    f.ensure_same_grid(g)?;
    let a = f.spectrum();
    let b = g.spectrum();
    let gr = f.grid();
    let scale = gr.length() / (gr.n() as f64 * gr.n() as f64);
    Ok(scale * a.iter().zip(&b).map(|(x, y)| (x * y.conj()).re).sum::<f64>())
}
