use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{BoError, Result};

struct Plans {
    n: usize,
    length: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

/// Uniform periodic grid on `[-L/2, L/2)` with `n` nodes.
///
/// Cloning is cheap: FFT plans and the wavenumber table are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<Plans>,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Grid> {
        if n < 16 || n % 2 != 0 {
            return Err(BoError::InvalidGrid(format!("n = {n} must be even and >= 16")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(BoError::InvalidGrid(format!("length = {length} must be positive")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let dk = 2.0 * std::f64::consts::PI / length;
        let wavenumbers = (0..n)
            .map(|m| {
                let m = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
                dk * m
            })
            .collect();
        Ok(Grid { inner: Arc::new(Plans { n, length, forward, inverse, wavenumbers }) })
    }

    /// The default resolution: 4096 nodes on a period of 400.
    pub fn default_grid() -> Grid {
        Grid::new(4096, 400.0).expect("default grid is valid")
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn spacing(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -0.5 * self.inner.length + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n()).map(|j| self.node(j)).collect()
    }

    /// Wavenumbers in FFT order; index `n/2` is the Nyquist mode (negative sign).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    pub fn nyquist_index(&self) -> usize {
        self.inner.n / 2
    }

    /// Largest wavenumber index kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.inner.n / 3
    }

    pub fn dealias_mask(&self) -> Vec<bool> {
        let cut = self.dealias_cutoff();
        (0..self.n())
            .map(|m| {
                let a = if m <= self.n() / 2 { m } else { self.n() - m };
                a <= cut && m != self.nyquist_index()
            })
            .collect()
    }

    /// Unnormalized forward transform of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inner.forward.process(&mut buf);
        buf
    }

    /// In-place forward transform of complex data.
    pub fn forward_complex(&self, buf: &mut [Complex64]) {
        self.inner.forward.process(buf);
    }

    /// Inverse transform (with 1/n) returning the real part.
    pub fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inverse_complex(&mut spec);
        spec.iter().map(|c| c.re).collect()
    }

    /// In-place inverse transform including the 1/n normalisation.
    pub fn inverse_complex(&self, buf: &mut [Complex64]) {
        self.inner.inverse.process(buf);
        let s = 1.0 / self.n() as f64;
        for c in buf.iter_mut() {
            *c *= s;
        }
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(BoError::GridMismatch {
                n1: self.n(),
                l1: self.length(),
                n2: other.n(),
                l2: other.length(),
            })
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.length.to_bits() == other.inner.length.to_bits())
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n", &self.n()).field("length", &self.length()).finish()
    }
}

/// Real samples on a [`Grid`].
///
/// Binary arithmetic operators panic when the grids differ; fallible
/// counterparts go through [`Field::ensure_same_grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Field {
        Field { grid: grid.clone(), values: vec![0.0; grid.n()] }
    }

    pub fn constant(grid: &Grid, value: f64) -> Field {
        Field { grid: grid.clone(), values: vec![value; grid.n()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: grid.clone(), values: (0..grid.n()).map(|j| f(grid.node(j))).collect() }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.n() {
            return Err(BoError::InvalidGrid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.n()
            )));
        }
        Ok(Field { grid: grid.clone(), values })
    }

    /// Real field from spectral coefficients (imaginary residue discarded).
    pub fn from_spectrum(grid: &Grid, spec: Vec<Complex64>) -> Field {
        assert_eq!(spec.len(), grid.n(), "spectrum length must equal grid size");
        Field { grid: grid.clone(), values: grid.inverse(spec) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.forward(&self.values)
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        self.grid.ensure_same(&other.grid)
    }

    /// Applies the Fourier multiplier `symbol(k)`.
    ///
    /// At the Nyquist index only the real part of the symbol is kept, so odd
    /// symbols annihilate that mode and the output stays real.
    pub fn apply_symbol(&self, symbol: impl Fn(f64) -> Complex64) -> Field {
        let mut spec = self.spectrum();
        let ks = self.grid.wavenumbers();
        let nyq = self.grid.nyquist_index();
        for (m, c) in spec.iter_mut().enumerate() {
            let s = symbol(ks[m]);
            *c *= if m == nyq { Complex64::new(s.re, 0.0) } else { s };
        }
        Field::from_spectrum(&self.grid, spec)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise map that also sees the node coordinate.
    pub fn map_with_x(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        let g = &self.grid;
        Field {
            grid: g.clone(),
            values: self.values.iter().enumerate().map(|(j, &v)| f(g.node(j), v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert!(self.grid == other.grid, "binary field operation on different grids");
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        self.zip_with(other, |x, y| x + a * y)
    }

    /// Trapezoidal quadrature, exact for grid functions on the torus.
    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    pub fn inner(&self, other: &Field) -> f64 {
        assert!(self.grid == other.grid, "inner product of fields on different grids");
        self.grid.spacing() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `∫ f² w`.
    pub fn weighted_square(&self, weight: &Field) -> f64 {
        assert!(self.grid == weight.grid, "weighted integral on different grids");
        self.grid.spacing() * self.values.iter().zip(&weight.values).map(|(a, w)| a * a * w).sum::<f64>()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// `g(x) = f(x - a)` by spectral phase shift.
    pub fn translate(&self, a: f64) -> Field {
        self.apply_symbol(|k| Complex64::from_polar(1.0, -k * a))
    }

    /// Index reflection `j -> (n - j) mod n`, i.e. `x -> -x` on the torus.
    pub fn reflect(&self) -> Field {
        let n = self.len();
        Field {
            grid: self.grid.clone(),
            values: (0..n).map(|j| self.values[(n - j) % n]).collect(),
        }
    }

    /// Maximum of `|self - other|` over nodes with `|x| <= frac * L/2`.
    pub fn max_diff_within(&self, other: &Field, frac: f64) -> f64 {
        assert!(self.grid == other.grid, "comparison of fields on different grids");
        let half = 0.5 * self.grid.length() * frac;
        (0..self.len())
            .filter(|&j| self.grid.node(j).abs() <= half)
            .map(|j| (self.values[j] - other.values[j]).abs())
            .fold(0.0, f64::max)
    }
}

impl Add<&Field> for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub<&Field> for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a - b)
    }
}

/// Pointwise product.
impl Mul<&Field> for &Field {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Mul<&Field> for f64 {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        rhs.scale(self)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(-1.0)
    }
}
