//! Initial perturbations: Gaussian bumps or seeded band-limited noise,
//! normalised in `H^{1/2}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use super::config::{ExperimentConfig, PerturbationKind};
use crate::error::{invalid, Result};
use crate::profiles::{self, SolitonParams};
use crate::spectral::{sobolev_norm, Field, Grid, SobolevKind};

/// Band-limited random field with modes `0 < |k| ≤ kmax`.
pub fn random_bandlimited(grid: &Grid, kmax: f64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n();
    let ks = grid.wavenumbers();
    let mut spec = vec![Complex64::default(); n];
    for m in 1..n / 2 {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        if ks[m] <= kmax {
            spec[m] = Complex64::new(re, im);
            spec[n - m] = Complex64::new(re, -im);
        }
    }
    Field::from_spectrum(grid, spec)
}

/// Builds `η₀` for a soliton `base`: shape by kind, optional envelope,
/// optional projection off `Q_c` and `Q_c'`, `H^{1/2}` norm `amplitude`, and
/// optionally a final `a Q_c` correction with `‖Q_c + η₀‖ = ‖Q_c‖`.
pub fn build_perturbation(cfg: &ExperimentConfig, grid: &Grid, base: &SolitonParams) -> Result<Field> {
    let xc = cfg.perturbation_center;
    let sigma = cfg.perturbation_width;
    let len = grid.length();
    let envelope = |x: f64| {
        if sigma > 0.0 {
            let d = profiles::wrap(x - xc, len);
            (-0.5 * d * d / (sigma * sigma)).exp()
        } else {
            1.0
        }
    };
    let raw = match cfg.perturbation_kind {
        PerturbationKind::None => return Ok(Field::zeros(grid)),
        PerturbationKind::EvenBump => Field::from_fn(grid, envelope),
        PerturbationKind::OddBump => {
            let s = if sigma > 0.0 { sigma } else { 1.0 };
            Field::from_fn(grid, |x| profiles::wrap(x - xc, len) / s * envelope(x))
        }
        PerturbationKind::RandomBandlimited => {
            let seed = cfg.seed.ok_or_else(|| invalid("seed", "required for random perturbations"))?;
            random_bandlimited(grid, cfg.band_kmax, seed).zip_with(&Field::from_fn(grid, envelope), |a, b| a * b)
        }
    };
    let q = profiles::soliton(base, grid);
    let qp = profiles::soliton_prime(base, grid);
    let mut xi = raw;
    if cfg.orthogonalize {
        for d in [&q, &qp] {
            let e = d.scale(1.0 / d.l2_norm());
            xi = xi.axpy(-xi.inner(&e), &e);
        }
    }
    let h = sobolev_norm(&xi, 0.5, SobolevKind::Inhomogeneous)?;
    if h == 0.0 || cfg.amplitude == 0.0 {
        return Ok(Field::zeros(grid));
    }
    xi = xi.scale(cfg.amplitude / h);
    if cfg.mass_neutral {
        let qq = q.l2_norm_sq();
        // s = 1 + a solves s²‖Q‖² + 2s(ξ,Q) + ‖ξ‖² = ‖Q‖², root near 1
        let b = xi.inner(&q) / qq;
        let one_a = -b + (b * b + 1.0 - xi.l2_norm_sq() / qq).sqrt();
        xi = xi.axpy(one_a - 1.0, &q);
    }
    Ok(xi)
}
