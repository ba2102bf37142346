//! Closed-form profiles: the soliton `Q = 4/(1+x²)`, its companions
//! `S`, `T`, `f₀`, `f₁`, the arctan weight `φ_A` and the kernel `K_φ`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{invalid, BoError, Result};
use crate::spectral::{Field, Grid};

pub fn q(x: f64) -> f64 {
    4.0 / (1.0 + x * x)
}

pub fn q_prime(x: f64) -> f64 {
    let d = 1.0 + x * x;
    -8.0 * x / (d * d)
}

pub fn q_second(x: f64) -> f64 {
    let d = 1.0 + x * x;
    (24.0 * x * x - 8.0) / (d * d * d)
}

/// `S = (xQ)' = ½Q² − Q`.
pub fn s(x: f64) -> f64 {
    let d = 1.0 + x * x;
    4.0 * (1.0 - x * x) / (d * d)
}

pub fn s_prime(x: f64) -> f64 {
    2.0 * q_prime(x) + x * q_second(x)
}

/// Nearest periodic image of a displacement.
pub fn wrap(d: f64, length: f64) -> f64 {
    d - length * (d / length).round()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolitonParams {
    pub c: f64,
    pub x0: f64,
}

impl SolitonParams {
    pub fn new(c: f64, x0: f64) -> Result<SolitonParams> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", format!("speed must be positive, got {c}")));
        }
        if !x0.is_finite() {
            return Err(invalid("x0", "center must be finite"));
        }
        Ok(SolitonParams { c, x0 })
    }

    pub fn unit() -> SolitonParams {
        SolitonParams { c: 1.0, x0: 0.0 }
    }
}

/// Samples `c Q(c (x − x₀))` using the nearest periodic image of `x − x₀`.
pub fn soliton(p: &SolitonParams, grid: &Grid) -> Field {
    sample_scaled(p, grid, q, p.c)
}

/// `∂_x Q_c(· − x₀) = c² Q'(c(x − x₀))`.
pub fn soliton_prime(p: &SolitonParams, grid: &Grid) -> Field {
    sample_scaled(p, grid, q_prime, p.c * p.c)
}

/// `∂_x² Q_c(· − x₀) = c³ Q''(c(x − x₀))`.
pub fn soliton_second(p: &SolitonParams, grid: &Grid) -> Field {
    sample_scaled(p, grid, q_second, p.c.powi(3))
}

/// `∂_c Q_c(· − x₀) = S(c(x − x₀))`.
pub fn soliton_dc(p: &SolitonParams, grid: &Grid) -> Field {
    sample_scaled(p, grid, s, 1.0)
}

/// `∂_x ∂_c Q_c(· − x₀) = c S'(c(x − x₀))`.
pub fn soliton_dc_prime(p: &SolitonParams, grid: &Grid) -> Field {
    sample_scaled(p, grid, s_prime, p.c)
}

fn sample_scaled(p: &SolitonParams, grid: &Grid, f: fn(f64) -> f64, amp: f64) -> Field {
    let len = grid.length();
    Field::from_fn(grid, |x| amp * f(p.c * wrap(x - p.x0, len)))
}

pub fn profile_q(grid: &Grid) -> Field {
    Field::from_fn(grid, q)
}

pub fn profile_q_prime(grid: &Grid) -> Field {
    Field::from_fn(grid, q_prime)
}

pub fn profile_s(grid: &Grid) -> Field {
    Field::from_fn(grid, s)
}

/// `T = S − Q`.
pub fn profile_t(grid: &Grid) -> Field {
    Field::from_fn(grid, |x| s(x) - q(x))
}

/// `f₀ = Q + ¼(1+√5) Q²`.
pub fn profile_f0(grid: &Grid) -> Field {
    let a = 0.25 * (1.0 + 5f64.sqrt());
    Field::from_fn(grid, |x| q(x) + a * q(x) * q(x))
}

/// `f₁ = Q + ¼(1−√5) Q²`.
pub fn profile_f1(grid: &Grid) -> Field {
    let a = 0.25 * (1.0 - 5f64.sqrt());
    Field::from_fn(grid, |x| q(x) + a * q(x) * q(x))
}

/// Superposition of solitons; centers must increase with gaps of at least
/// `min_gap`.
pub fn multisoliton_sum(params: &[SolitonParams], grid: &Grid, min_gap: f64) -> Result<Field> {
    for w in params.windows(2) {
        let gap = w[1].x0 - w[0].x0;
        if gap < min_gap {
            return Err(BoError::Collision { gap, min_gap });
        }
    }
    Ok(params.iter().fold(Field::zeros(grid), |acc, p| &acc + &soliton(p, grid)))
}

/// Scale and offset of the weight `φ_A(x − shift)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightParams {
    pub a: f64,
    pub shift: f64,
}

impl WeightParams {
    pub fn new(a: f64, shift: f64) -> Result<WeightParams> {
        if !(a > 1.0 && a.is_finite()) {
            return Err(invalid("A", format!("weight scale must exceed 1, got {a}")));
        }
        if !shift.is_finite() {
            return Err(invalid("shift", "must be finite"));
        }
        Ok(WeightParams { a, shift })
    }

    pub fn with_shift(&self, shift: f64) -> WeightParams {
        WeightParams { a: self.a, shift }
    }
}

/// `φ_A(x) = π/2 + arctan(x/A)`.
pub fn phi(x: f64, a: f64) -> f64 {
    0.5 * PI + (x / a).atan()
}

pub fn phi_d1(x: f64, a: f64) -> f64 {
    let s = x / a;
    1.0 / (a * (1.0 + s * s))
}

pub fn phi_d2(x: f64, a: f64) -> f64 {
    let s = x / a;
    let d = 1.0 + s * s;
    -2.0 * x / (a * a * a * d * d)
}

/// `φ''' = (φ'/A²)(−2/(1+s²) + 8s²/(1+s²)²)` with `s = x/A`.
pub fn phi_d3(x: f64, a: f64) -> f64 {
    let s = x / a;
    let d = 1.0 + s * s;
    phi_d1(x, a) / (a * a) * (-2.0 / d + 8.0 * s * s / (d * d))
}

/// `φ⁽⁵⁾ = Im[24 / (x − iA)⁵]`, from `φ' = Im[1/(x − iA)]`.
pub fn phi_d5(x: f64, a: f64) -> f64 {
    (24.0 / Complex64::new(x, -a).powi(5)).im
}

pub fn phi_weight(w: &WeightParams, grid: &Grid) -> Field {
    Field::from_fn(grid, |x| phi(x - w.shift, w.a))
}

pub fn phi_prime(w: &WeightParams, grid: &Grid) -> Field {
    Field::from_fn(grid, |x| phi_d1(x - w.shift, w.a))
}

pub fn phi_second(w: &WeightParams, grid: &Grid) -> Field {
    Field::from_fn(grid, |x| phi_d2(x - w.shift, w.a))
}

pub fn phi_third(w: &WeightParams, grid: &Grid) -> Field {
    Field::from_fn(grid, |x| phi_d3(x - w.shift, w.a))
}

/// Closed forms `(Hφ', Hφ'')` with `Hφ' = −x/(A²(1+(x/A)²))` and
/// `Hφ'' = φ'/A − 2φ'²`.
pub fn hilbert_phi_oracle(w: &WeightParams, grid: &Grid) -> (Field, Field) {
    let a = w.a;
    let h1 = Field::from_fn(grid, |x| {
        let y = x - w.shift;
        -y / (a * a * (1.0 + (y / a).powi(2)))
    });
    let h2 = Field::from_fn(grid, |x| {
        let p = phi_d1(x - w.shift, a);
        p / a - 2.0 * p * p
    });
    (h1, h2)
}

/// `K_φ(x,y) = [2(φ(x)−φ(y)) − (φ'(x)+φ'(y))(x−y)] / (x−y)³`.
///
/// For `|x − y| < 2·10⁻²A` the midpoint expansion
/// `−φ'''/6 − (x−y)²φ⁽⁵⁾/240` replaces the cancelling quotient; at the
/// switch both forms agree to about 10⁻⁸ relative.
pub fn kernel_k_phi(x: f64, y: f64, w: &WeightParams) -> f64 {
    let (a, xs, ys) = (w.a, x - w.shift, y - w.shift);
    let h = xs - ys;
    if h.abs() < 2e-2 * a {
        // Expansion about the midpoint; the next term is O(h⁴ φ⁽⁷⁾).
        let mid = 0.5 * (xs + ys);
        -phi_d3(mid, a) / 6.0 - h * h * phi_d5(mid, a) / 240.0
    } else {
        (2.0 * (phi(xs, a) - phi(ys, a)) - (phi_d1(xs, a) + phi_d1(ys, a)) * h) / (h * h * h)
    }
}

/// Exact integrals of the soliton profile on the line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedFormTable {
    pub int_q: f64,
    pub int_q2: f64,
    pub int_q3: f64,
    pub int_q4: f64,
    pub int_qp2: f64,
    pub int_s2: f64,
    pub energy_q: f64,
}

pub const CLOSED_FORM: ClosedFormTable = ClosedFormTable {
    int_q: 4.0 * PI,
    int_q2: 8.0 * PI,
    int_q3: 24.0 * PI,
    int_q4: 80.0 * PI,
    int_qp2: 4.0 * PI,
    int_s2: 4.0 * PI,
    energy_q: -4.0 * PI,
};

pub fn closed_form_integrals() -> ClosedFormTable {
    CLOSED_FORM
}

/// Line integrals of the profile by the midpoint rule in `θ` with `x = tan θ`.
///
/// Every integrand becomes a trigonometric polynomial in `θ`, so `m ≥ 8`
/// nodes integrate it to rounding error without truncating the domain. The
/// energy uses `DQ = S`, which the identity suite checks spectrally.
pub fn closed_form_quadrature(m: usize) -> ClosedFormTable {
    let h = PI / m as f64;
    let mut t = ClosedFormTable { int_q: 0.0, int_q2: 0.0, int_q3: 0.0, int_q4: 0.0, int_qp2: 0.0, int_s2: 0.0, energy_q: 0.0 };
    let mut int_qs = 0.0;
    for j in 0..m {
        let th = -0.5 * PI + (j as f64 + 0.5) * h;
        let (sn, cs) = th.sin_cos();
        let jac = h / (cs * cs);
        let qv = 4.0 * cs * cs;
        let qp = -8.0 * sn * cs * cs * cs;
        let sv = 4.0 * cs * cs * (cs * cs - sn * sn);
        t.int_q += qv * jac;
        t.int_q2 += qv * qv * jac;
        t.int_q3 += qv * qv * qv * jac;
        t.int_q4 += qv * qv * qv * qv * jac;
        t.int_qp2 += qp * qp * jac;
        t.int_s2 += sv * sv * jac;
        int_qs += qv * sv * jac;
    }
    t.energy_q = int_qs - t.int_q3 / 3.0;
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_values() {
        let g = Grid::new(64, 8.0).unwrap();
        let u = soliton(&SolitonParams::new(2.0, 0.0).unwrap(), &g);
        assert_eq!(u.values()[32], 8.0);
        assert!((2.0 * q(2.0 * 0.5) - 4.0).abs() < 1e-15);
        assert_eq!(s(0.0), 4.0);
        assert_eq!(s(0.0) - q(0.0), 0.0);
    }

    #[test]
    fn s_matches_half_q_squared_minus_q() {
        for i in -50..50 {
            let x = i as f64 * 0.37;
            assert!((s(x) - (0.5 * q(x) * q(x) - q(x))).abs() < 1e-14);
        }
    }

    #[test]
    fn second_and_third_weight_derivatives_match_finite_differences() {
        let a = 7.0;
        let h = 1e-4;
        for i in -20..20 {
            let x = i as f64 * 1.3;
            let fd2 = (phi_d1(x + h, a) - phi_d1(x - h, a)) / (2.0 * h);
            let fd3 = (phi_d2(x + h, a) - phi_d2(x - h, a)) / (2.0 * h);
            assert!((fd2 - phi_d2(x, a)).abs() < 1e-9);
            assert!((fd3 - phi_d3(x, a)).abs() < 1e-9);
            let g = 1e-2;
            let fd5 = (phi_d3(x + g, a) - 2.0 * phi_d3(x, a) + phi_d3(x - g, a)) / (g * g);
            assert!((fd5 - phi_d5(x, a)).abs() < 1e-8, "{fd5} {}", phi_d5(x, a));
        }
    }

    #[test]
    fn kernel_continuous_across_threshold() {
        let w = WeightParams::new(5.0, 0.0).unwrap();
        let x = 1.7;
        let below = kernel_k_phi(x, x - 0.99999e-2 * 2.0 * 5.0, &w);
        let above = kernel_k_phi(x, x - 1.00001e-2 * 2.0 * 5.0, &w);
        assert!((below - above).abs() < 1e-6 * below.abs().max(1e-3), "{below} {above}");
    }

    #[test]
    fn rejects_bad_params() {
        assert!(SolitonParams::new(0.0, 0.0).is_err());
        assert!(WeightParams::new(1.0, 0.0).is_err());
    }
}
