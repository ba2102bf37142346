//! Time integration of the Benjamin-Ono equation, the perturbation equation
//! for `η` and the linear flow for `w`, all in semilinear spectral form
//! `v̂_t = Λ(k) v̂ + N(v̂)` with the linear part integrated exactly.

use std::f64::consts::PI;
use std::fmt;

use rustfft::num_complex::Complex64;

use crate::error::{invalid, BoError, Result};
use crate::linops::LinearBackground;
use crate::profiles;
use crate::spectral::{half_norm_sq, Field, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exponential time differencing RK4 (Cox-Matthews, contour-integral coefficients).
    EtdRk4,
    /// Integrating-factor RK4.
    IfRk4,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// 2/3-rule dealiasing of quadratic products.
    pub dealias: bool,
    /// Speed of the co-moving frame; 0 is the lab frame.
    pub frame_speed: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig { dt: 1e-3, scheme: Scheme::EtdRk4, dealias: true, frame_speed: 0.0 }
    }
}

impl StepperConfig {
    pub fn with_dt(dt: f64) -> StepperConfig {
        StepperConfig { dt, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !self.frame_speed.is_finite() {
            return Err(invalid("frame_speed", "must be finite"));
        }
        Ok(())
    }
}

/// A system `v̂_t = Λ(k) v̂ + N(v̂)` on a grid.
pub trait Semilinear {
    fn grid(&self) -> &Grid;
    /// Linear symbol at wavenumber `k`.
    fn symbol(&self, k: f64) -> Complex64;
    /// Nonlinear (or non-diagonal) part evaluated on spectral data.
    fn nonlinear(&self, v: &[Complex64], out: &mut [Complex64]);
}

const CONTOUR_POINTS: usize = 32;

/// Precomputed exponential coefficients for one system and step size.
pub struct Propagator<S: Semilinear> {
    sys: S,
    dt: f64,
    scheme: Scheme,
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl<S: Semilinear> Propagator<S> {
    pub fn new(sys: S, dt: f64, scheme: Scheme) -> Propagator<S> {
        let g = sys.grid().clone();
        let nyq = g.nyquist_index();
        let lin: Vec<Complex64> = g
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(m, &k)| {
                let s = sys.symbol(k);
                if m == nyq {
                    Complex64::new(s.re, 0.0)
                } else {
                    s
                }
            })
            .collect();
        let e: Vec<Complex64> = lin.iter().map(|l| (l * dt).exp()).collect();
        let e2: Vec<Complex64> = lin.iter().map(|l| (l * dt * 0.5).exp()).collect();
        let n = lin.len();
        let (mut q, mut f1, mut f2, mut f3) = (vec![Complex64::default(); n], vec![], vec![], vec![]);
        if scheme == Scheme::EtdRk4 {
            f1 = q.clone();
            f2 = q.clone();
            f3 = q.clone();
            let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
                .map(|j| Complex64::from_polar(1.0, PI * (j as f64 + 0.5) / (CONTOUR_POINTS as f64) * 2.0))
                .collect();
            let inv_m = 1.0 / CONTOUR_POINTS as f64;
            for m in 0..n {
                let lh = lin[m] * dt;
                let (mut a, mut b, mut c, mut d) = (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
                for r in &roots {
                    let z = lh + r;
                    let ez = z.exp();
                    let z3 = z * z * z;
                    a += ((z * 0.5).exp() - 1.0) / z;
                    b += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                    c += (2.0 + z + ez * (z - 2.0)) / z3;
                    d += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
                }
                q[m] = a * dt * inv_m;
                f1[m] = b * dt * inv_m;
                f2[m] = c * dt * inv_m;
                f3[m] = d * dt * inv_m;
            }
        }
        Propagator { sys, dt, scheme, e, e2, q, f1, f2, f3 }
    }

    pub fn system(&self) -> &S {
        &self.sys
    }

    pub fn system_mut(&mut self) -> &mut S {
        &mut self.sys
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances spectral data by one step.
    pub fn step(&self, v: &mut [Complex64]) {
        let n = v.len();
        let mut nv = vec![Complex64::default(); n];
        let mut na = nv.clone();
        let mut nb = nv.clone();
        let mut nc = nv.clone();
        let mut a = nv.clone();
        let mut b = nv.clone();
        let mut c = nv.clone();
        let h = self.dt;
        self.sys.nonlinear(v, &mut nv);
        match self.scheme {
            Scheme::EtdRk4 => {
                for m in 0..n {
                    a[m] = self.e2[m] * v[m] + self.q[m] * nv[m];
                }
                self.sys.nonlinear(&a, &mut na);
                for m in 0..n {
                    b[m] = self.e2[m] * v[m] + self.q[m] * na[m];
                }
                self.sys.nonlinear(&b, &mut nb);
                for m in 0..n {
                    c[m] = self.e2[m] * a[m] + self.q[m] * (2.0 * nb[m] - nv[m]);
                }
                self.sys.nonlinear(&c, &mut nc);
                for m in 0..n {
                    v[m] = self.e[m] * v[m] + nv[m] * self.f1[m] + 2.0 * (na[m] + nb[m]) * self.f2[m] + nc[m] * self.f3[m];
                }
            }
            Scheme::IfRk4 => {
                for m in 0..n {
                    a[m] = self.e2[m] * (v[m] + 0.5 * h * nv[m]);
                }
                self.sys.nonlinear(&a, &mut na);
                for m in 0..n {
                    b[m] = self.e2[m] * v[m] + 0.5 * h * na[m];
                }
                self.sys.nonlinear(&b, &mut nb);
                for m in 0..n {
                    c[m] = self.e[m] * v[m] + h * self.e2[m] * nb[m];
                }
                self.sys.nonlinear(&c, &mut nc);
                for m in 0..n {
                    v[m] = self.e[m] * v[m]
                        + h / 6.0 * (self.e[m] * nv[m] + 2.0 * self.e2[m] * (na[m] + nb[m]) + nc[m]);
                }
            }
        }
    }
}

fn dealias_in_place(grid: &Grid, mask: &[bool], v: &mut [Complex64], enabled: bool) {
    let nyq = grid.nyquist_index();
    for (m, c) in v.iter_mut().enumerate() {
        if (enabled && !mask[m]) || m == nyq {
            *c = Complex64::default();
        }
    }
}

/// `∂_x` of a real product given in physical space, returned in spectral space.
fn spectral_dx_of(grid: &Grid, mut prod: Vec<Complex64>, scale: f64, mask: &[bool], dealias: bool, out: &mut [Complex64]) {
    grid.forward_complex(&mut prod);
    dealias_in_place(grid, mask, &mut prod, dealias);
    for ((o, p), &k) in out.iter_mut().zip(&prod).zip(grid.wavenumbers()) {
        *o = p * Complex64::new(0.0, k * scale);
    }
}

fn to_physical(grid: &Grid, v: &[Complex64], mask: &[bool], dealias: bool) -> Vec<Complex64> {
    let mut buf = v.to_vec();
    dealias_in_place(grid, mask, &mut buf, dealias);
    grid.inverse_complex(&mut buf);
    buf.iter_mut().for_each(|c| c.im = 0.0);
    buf
}

/// `u_t + H u_xx + u u_x = 0` in a frame moving at `frame_speed`:
/// `û_t = i(k|k| + s k) û − ½ ik (u²)^`.
pub struct BoSystem {
    grid: Grid,
    mask: Vec<bool>,
    dealias: bool,
    frame_speed: f64,
}

impl BoSystem {
    pub fn new(grid: &Grid, cfg: &StepperConfig) -> BoSystem {
        BoSystem { grid: grid.clone(), mask: grid.dealias_mask(), dealias: cfg.dealias, frame_speed: cfg.frame_speed }
    }
}

impl Semilinear for BoSystem {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn symbol(&self, k: f64) -> Complex64 {
        Complex64::new(0.0, k * k.abs() + self.frame_speed * k)
    }

    fn nonlinear(&self, v: &[Complex64], out: &mut [Complex64]) {
        let mut u = to_physical(&self.grid, v, &self.mask, self.dealias);
        u.iter_mut().for_each(|c| *c = Complex64::new(c.re * c.re, 0.0));
        spectral_dx_of(&self.grid, u, -0.5, &self.mask, self.dealias, out);
    }
}

/// How `β(t)` is chosen in the linear flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaMode {
    /// `β = ∫ w L(Q'') / ∫(Q')²`, which keeps `∫ w Q'` fixed.
    ClosedLoop,
    Zero,
}

/// `w_t = (Lw)_x + β Q'`; linear part `ik(|k|+1)`, the product `Qw` is not
/// dealiased (the flow is linear in `w`).
pub struct LinearWSystem {
    grid: Grid,
    background: LinearBackground,
    q_prime_hat: Vec<Complex64>,
    l_q_second_hat: Vec<Complex64>,
    mode: BetaMode,
}

impl LinearWSystem {
    pub fn new(grid: &Grid, mode: BetaMode) -> LinearWSystem {
        let background = LinearBackground::new(grid);
        let q_prime_hat = background.q_prime.spectrum();
        let l_q_second_hat = background.l_q_second.spectrum();
        LinearWSystem { grid: grid.clone(), background, q_prime_hat, l_q_second_hat, mode }
    }

    pub fn background(&self) -> &LinearBackground {
        &self.background
    }

    /// `β` read directly from spectral data.
    pub fn beta_spectral(&self, v: &[Complex64]) -> f64 {
        match self.mode {
            BetaMode::Zero => 0.0,
            BetaMode::ClosedLoop => {
                let g = &self.grid;
                let scale = g.length() / (g.n() as f64 * g.n() as f64);
                let num: f64 = v.iter().zip(&self.l_q_second_hat).map(|(a, b)| (a * b.conj()).re).sum();
                scale * num / self.background.q_prime_norm_sq
            }
        }
    }

    pub fn beta(&self, w: &Field) -> f64 {
        match self.mode {
            BetaMode::Zero => 0.0,
            BetaMode::ClosedLoop => self.background.beta(w),
        }
    }
}

impl Semilinear for LinearWSystem {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn symbol(&self, k: f64) -> Complex64 {
        Complex64::new(0.0, k * (k.abs() + 1.0))
    }

    fn nonlinear(&self, v: &[Complex64], out: &mut [Complex64]) {
        let mask = vec![true; v.len()];
        let mut w = to_physical(&self.grid, v, &mask, false);
        for (c, q) in w.iter_mut().zip(self.background.q.values()) {
            *c = Complex64::new(q * c.re, 0.0);
        }
        spectral_dx_of(&self.grid, w, -1.0, &mask, false, out);
        let beta = self.beta_spectral(v);
        if beta != 0.0 {
            for (o, q) in out.iter_mut().zip(&self.q_prime_hat) {
                *o += q * beta;
            }
        }
    }
}

/// `η_t = (Lη − ½η²)_x + (ρ' − 1)(Q + η)_x` with a frozen `ρ'`.
///
/// The constant-coefficient part `(Dη + ρ'η)_x` is treated exactly.
pub struct EtaSystem {
    grid: Grid,
    mask: Vec<bool>,
    dealias: bool,
    rho_dot: f64,
    q: Field,
    q_prime_hat: Vec<Complex64>,
}

impl EtaSystem {
    pub fn new(grid: &Grid, rho_dot: f64, cfg: &StepperConfig) -> EtaSystem {
        let q = profiles::profile_q(grid);
        let q_prime_hat = profiles::profile_q_prime(grid).spectrum();
        EtaSystem { grid: grid.clone(), mask: grid.dealias_mask(), dealias: cfg.dealias, rho_dot, q, q_prime_hat }
    }
}

impl Semilinear for EtaSystem {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn symbol(&self, k: f64) -> Complex64 {
        Complex64::new(0.0, k * (k.abs() + self.rho_dot))
    }

    fn nonlinear(&self, v: &[Complex64], out: &mut [Complex64]) {
        let mut e = to_physical(&self.grid, v, &self.mask, self.dealias);
        for (c, q) in e.iter_mut().zip(self.q.values()) {
            *c = Complex64::new(q * c.re + 0.5 * c.re * c.re, 0.0);
        }
        spectral_dx_of(&self.grid, e, -1.0, &self.mask, self.dealias, out);
        let drift = self.rho_dot - 1.0;
        if drift != 0.0 {
            for (o, q) in out.iter_mut().zip(&self.q_prime_hat) {
                *o += q * drift;
            }
        }
    }
}

/// One step of the Benjamin-Ono equation.
pub fn step_bo(u: &Field, cfg: &StepperConfig) -> Result<Field> {
    cfg.validate()?;
    let p = Propagator::new(BoSystem::new(u.grid(), cfg), cfg.dt, cfg.scheme);
    let mut v = u.spectrum();
    p.step(&mut v);
    check_blowup(u.grid(), &v, cfg.dt)?;
    Ok(Field::from_spectrum(u.grid(), v))
}

/// One step of the linear flow for `w`.
pub fn step_linearized_w(w: &Field, mode: BetaMode, cfg: &StepperConfig) -> Result<Field> {
    cfg.validate()?;
    let p = Propagator::new(LinearWSystem::new(w.grid(), mode), cfg.dt, cfg.scheme);
    let mut v = w.spectrum();
    p.step(&mut v);
    check_blowup(w.grid(), &v, cfg.dt)?;
    Ok(Field::from_spectrum(w.grid(), v))
}

/// One step of the `η` equation with the supplied `ρ'`.
pub fn step_eta(eta: &Field, rho_dot: f64, cfg: &StepperConfig) -> Result<Field> {
    cfg.validate()?;
    let p = Propagator::new(EtaSystem::new(eta.grid(), rho_dot, cfg), cfg.dt, cfg.scheme);
    let mut v = eta.spectrum();
    p.step(&mut v);
    check_blowup(eta.grid(), &v, cfg.dt)?;
    Ok(Field::from_spectrum(eta.grid(), v))
}

const BLOWUP_LIMIT: f64 = 1e6;

/// `max|u| ≤ (1/n) Σ|v̂|` gives a cheap test; the exact maximum is only
/// computed when that bound trips.
fn check_blowup(grid: &Grid, v: &[Complex64], t: f64) -> Result<()> {
    let bound = v.iter().map(|c| c.norm()).sum::<f64>() / grid.n() as f64;
    if bound.is_finite() && bound <= BLOWUP_LIMIT {
        return Ok(());
    }
    let u = grid.inverse(v.to_vec());
    let max_abs = u.iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) });
    if max_abs.is_finite() && max_abs <= BLOWUP_LIMIT {
        Ok(())
    } else {
        Err(BoError::Blowup { t, max_abs })
    }
}

/// Conserved quantities of the flow.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Invariants {
    /// `∫ u²`.
    pub mass: f64,
    /// `∫ (u_x Hu − ⅓u³) = ‖D^{1/2}u‖² − ⅓∫u³`.
    pub energy: f64,
}

pub fn invariants(u: &Field) -> Invariants {
    Invariants { mass: u.l2_norm_sq(), energy: half_norm_sq(u) - u.map(|v| v * v * v).integral() / 3.0 }
}

/// Modulation parameters attached to a snapshot.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ModulationSample {
    pub t: f64,
    /// Lab-frame center.
    pub rho: f64,
    pub c: f64,
    pub eta_norm: f64,
}

/// Sampled solution history.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub invariant_series: Vec<Invariants>,
    pub modulation_series: Option<Vec<ModulationSample>>,
    /// `β(t)` at each sample for the linear flow.
    pub beta_series: Option<Vec<f64>>,
    /// Frame speed the snapshots are expressed in (lab coordinate `ξ + s t`).
    pub frame_speed: f64,
}

impl Trajectory {
    pub fn new(frame_speed: f64) -> Trajectory {
        Trajectory {
            times: Vec::new(),
            snapshots: Vec::new(),
            invariant_series: Vec::new(),
            modulation_series: None,
            beta_series: None,
            frame_speed,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.snapshots.first().map(|f| f.grid())
    }

    pub fn push(&mut self, t: f64, u: Field) {
        self.invariant_series.push(invariants(&u));
        self.times.push(t);
        self.snapshots.push(u);
    }

    pub fn last(&self) -> Option<&Field> {
        self.snapshots.last()
    }

    /// Lab-frame node coordinates of sample `i`.
    pub fn lab_nodes(&self, i: usize) -> Vec<f64> {
        let shift = self.frame_speed * self.times[i];
        self.snapshots[i].grid().nodes().iter().map(|x| x + shift).collect()
    }
}

/// A run that stopped early; the samples recorded before the abort are kept.
#[derive(Debug)]
pub struct RunAborted {
    pub partial: Trajectory,
    pub source: BoError,
}

impl fmt::Display for RunAborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "run aborted after {} samples: {}", self.partial.len(), self.source)
    }
}

impl std::error::Error for RunAborted {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

fn steps_per_sample(dt: f64, cadence: f64) -> Result<usize> {
    if !(cadence > 0.0 && cadence.is_finite()) {
        return Err(invalid("cadence", format!("must be positive, got {cadence}")));
    }
    let r = cadence / dt;
    let k = r.round();
    if k < 1.0 || (r - k).abs() > 1e-9 * r {
        return Err(invalid("cadence", format!("{cadence} is not a multiple of dt = {dt}")));
    }
    Ok(k as usize)
}

/// Evolves `u0` to time `T` sampling every `cadence`.
pub fn run(u0: &Field, horizon: f64, cfg: &StepperConfig, cadence: f64) -> std::result::Result<Trajectory, RunAborted> {
    let p = Propagator::new(BoSystem::new(u0.grid(), cfg), cfg.dt, cfg.scheme);
    run_with(&p, u0, horizon, cadence, cfg.frame_speed, |_, _| {})
}

/// Evolves the linear flow, recording `β` at every sample.
pub fn run_linear_w(
    w0: &Field,
    mode: BetaMode,
    horizon: f64,
    cfg: &StepperConfig,
    cadence: f64,
) -> std::result::Result<Trajectory, RunAborted> {
    let p = Propagator::new(LinearWSystem::new(w0.grid(), mode), cfg.dt, cfg.scheme);
    let mut betas = Vec::new();
    let mut traj = run_with(&p, w0, horizon, cadence, 0.0, |_, w| betas.push(p.system().beta(w)))?;
    traj.beta_series = Some(betas);
    Ok(traj)
}

/// Generic driver: `observe(t, field)` is called at every sample.
pub fn run_with<S: Semilinear>(
    p: &Propagator<S>,
    u0: &Field,
    horizon: f64,
    cadence: f64,
    frame_speed: f64,
    mut observe: impl FnMut(f64, &Field),
) -> std::result::Result<Trajectory, RunAborted> {
    let mut traj = Trajectory::new(frame_speed);
    let fail = |traj: Trajectory, e: BoError| RunAborted { partial: traj, source: e };
    let per = match steps_per_sample(p.dt(), cadence) {
        Ok(k) => k,
        Err(e) => return Err(fail(traj, e)),
    };
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(fail(traj, invalid("horizon", format!("must be >= 0, got {horizon}"))));
    }
    let total = (horizon / p.dt()).round() as usize;
    let grid = u0.grid().clone();
    let mut v = u0.spectrum();
    observe(0.0, u0);
    traj.push(0.0, u0.clone());
    for step in 1..=total {
        p.step(&mut v);
        let t = step as f64 * p.dt();
        if let Err(e) = check_blowup(&grid, &v, t) {
            return Err(fail(traj, e));
        }
        if step % per == 0 || step == total {
            let u = Field::from_spectrum(&grid, v.clone());
            observe(t, &u);
            traj.push(t, u);
        }
    }
    Ok(traj)
}
