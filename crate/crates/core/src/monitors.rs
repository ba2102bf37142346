//! Weighted-mass, Kato, monotonicity and virial diagnostics over trajectories.

use std::f64::consts::PI;

use serde::Serialize;
use serde_json::json;

use crate::error::{invalid, Result};
use crate::evolution::Trajectory;
use crate::modulation::ModulationState;
use crate::profiles::{self, phi, phi_d1, SolitonParams, WeightParams};
use crate::spectral::quadrature::integrate_samples;
use crate::spectral::{abs_derivative, derivative, half_norm_sq, hilbert, sobolev_norm, Field, SobolevKind};

/// A labelled scalar time series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Additive tolerance evaluated with a measured constant, when relevant.
    pub slack_budget: Option<f64>,
}

impl MonitorSeries {
    pub fn new(label: impl Into<String>) -> MonitorSeries {
        MonitorSeries { label: label.into(), times: Vec::new(), values: Vec::new(), slack_budget: None }
    }

    pub fn push(&mut self, t: f64, v: f64) {
        self.times.push(t);
        self.values.push(v);
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

/// `∫ u² φ_A(x − shift)`.
pub fn weighted_mass(u: &Field, w: &WeightParams) -> f64 {
    weighted_mass_at(u.values(), &u.grid().nodes(), u.grid().spacing(), w.a, w.shift)
}

fn weighted_mass_at(u: &[f64], x: &[f64], dx: f64, a: f64, center: f64) -> f64 {
    dx * u.iter().zip(x).map(|(v, x)| v * v * phi(x - center, a)).sum::<f64>()
}

fn weighted_by(u: &[f64], x: &[f64], dx: f64, weight: impl Fn(f64) -> f64) -> f64 {
    dx * u.iter().zip(x).map(|(v, x)| v * v * weight(*x)).sum::<f64>()
}

/// `|d/dt ½∫u²φ − ∫(Hu_x)(uφ' + u_xφ) − ⅓∫u³φ'|` with centered differences
/// at interior samples; the weight is static in the lab frame.
pub fn kato_residual(traj: &Trajectory, w: &WeightParams) -> Result<MonitorSeries> {
    let mut out = MonitorSeries::new(format!("kato_residual_A{}_shift{}", w.a, w.shift));
    if traj.len() < 3 {
        return Ok(out);
    }
    let masses: Vec<f64> = (0..traj.len())
        .map(|i| {
            let u = &traj.snapshots[i];
            0.5 * weighted_mass_at(u.values(), &traj.lab_nodes(i), u.grid().spacing(), w.a, w.shift)
        })
        .collect();
    for i in 1..traj.len() - 1 {
        let u = &traj.snapshots[i];
        let g = u.grid();
        let x = traj.lab_nodes(i);
        let ph = Field::from_values(g, x.iter().map(|x| phi(x - w.shift, w.a)).collect())?;
        let dph = Field::from_values(g, x.iter().map(|x| phi_d1(x - w.shift, w.a)).collect())?;
        let ux = derivative(u, 1);
        let hux = hilbert(&ux);
        let rhs = hux.inner(&(&(u * &dph) + &(&ux * &ph))) + (u * &(u * u)).inner(&dph) / 3.0;
        let lhs = (masses[i + 1] - masses[i - 1]) / (traj.times[i + 1] - traj.times[i - 1]);
        out.push(traj.times[i], (lhs - rhs).abs());
    }
    Ok(out)
}

/// One `(t₁, t₂)` comparison of a monotonicity inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairRecord {
    pub t1: f64,
    pub t2: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; negative values are violations before slack.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub label: String,
    pub x0: f64,
    pub lambda: f64,
    pub a: f64,
    pub records: Vec<PairRecord>,
    pub worst_margin: f64,
    /// Smallest constant `C` with `margin + C/x₀ ≥ 0` on every pair (or the
    /// analogous normalisation for the `η` version).
    pub c_meas: f64,
}

impl MonotonicityReport {
    fn from_records(label: String, x0: f64, lambda: f64, a: f64, records: Vec<PairRecord>) -> Self {
        let worst = records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        let worst_margin = if records.is_empty() { 0.0 } else { worst };
        MonotonicityReport { label, x0, lambda, a, records, worst_margin, c_meas: (-worst_margin).max(0.0) * x0 }
    }

    pub fn to_jsonl(&self) -> String {
        let params = json!({"x0": self.x0, "lambda": self.lambda, "A": self.a, "label": self.label});
        self.records
            .iter()
            .map(|r| {
                json!({"t1": r.t1, "t2": r.t2, "lhs": r.lhs, "rhs": r.rhs, "margin": r.margin, "params": params})
                    .to_string()
                    + "\n"
            })
            .collect()
    }
}

struct MonoSample {
    t: f64,
    rho: f64,
    x: Vec<f64>,
    u: Vec<f64>,
    dx: f64,
    mass: f64,
}

fn mono_samples(traj: &Trajectory, stride: usize) -> Result<Vec<MonoSample>> {
    let modu = traj
        .modulation_series
        .as_ref()
        .ok_or_else(|| invalid("traj", "monotonicity needs a modulation series"))?;
    if stride == 0 {
        return Err(invalid("stride", "must be positive"));
    }
    Ok((0..traj.len())
        .step_by(stride)
        .map(|i| {
            let u = &traj.snapshots[i];
            MonoSample {
                t: traj.times[i],
                rho: modu[i].rho,
                x: traj.lab_nodes(i),
                u: u.values().to_vec(),
                dx: u.grid().spacing(),
                mass: u.l2_norm_sq(),
            }
        })
        .collect())
}

fn check_mono_params(x0: f64, lambda: f64) -> Result<()> {
    if !(x0 > 1.0) {
        return Err(invalid("x0", format!("must exceed 1, got {x0}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid("lambda", format!("must lie in (0, 1), got {lambda}")));
    }
    Ok(())
}

fn right_pairs(s: &[MonoSample], x0: f64, lambda: f64, a: f64, offset: f64) -> Vec<PairRecord> {
    let lhs: Vec<f64> = s.iter().map(|p| weighted_mass_at(&p.u, &p.x, p.dx, a, p.rho + x0 + offset)).collect();
    let mut out = Vec::new();
    for i in 0..s.len() {
        for j in i..s.len() {
            let dt = s[j].t - s[i].t;
            let rhs = weighted_mass_at(&s[i].u, &s[i].x, s[i].dx, a, s[i].rho + lambda * dt + x0 + offset);
            out.push(PairRecord { t1: s[i].t, t2: s[j].t, lhs: lhs[j], rhs, margin: rhs - lhs[j] });
        }
    }
    out
}

/// `∫u²(t₂)φ(x−ρ(t₂)−x₀) ≤ ∫u²(t₁)φ(x−ρ(t₁)−λ(t₂−t₁)−x₀) + C/x₀` over every
/// pair of every `stride`-th sample; `w.shift` is added to `x₀`.
pub fn monotonicity_right(traj: &Trajectory, x0: f64, lambda: f64, w: &WeightParams, stride: usize) -> Result<MonotonicityReport> {
    check_mono_params(x0, lambda)?;
    let s = mono_samples(traj, stride)?;
    let records = right_pairs(&s, x0, lambda, w.a, w.shift);
    Ok(MonotonicityReport::from_records("monotonicity_right".into(), x0, lambda, w.a, records))
}

/// `∫u²(t₂)φ(x−ρ(t₂)+x₀+λ(t₂−t₁)) ≤ ∫u²(t₁)φ(x−ρ(t₁)+x₀) + C/x₀`: the
/// weight sits `x₀` behind the soliton and falls back at rate `λ`.
pub fn monotonicity_left(traj: &Trajectory, x0: f64, lambda: f64, w: &WeightParams, stride: usize) -> Result<MonotonicityReport> {
    check_mono_params(x0, lambda)?;
    let s = mono_samples(traj, stride)?;
    let mut records = Vec::new();
    let rhs: Vec<f64> = s.iter().map(|p| weighted_mass_at(&p.u, &p.x, p.dx, w.a, p.rho - x0 - w.shift)).collect();
    for i in 0..s.len() {
        for j in i..s.len() {
            let dt = s[j].t - s[i].t;
            let lhs = weighted_mass_at(&s[j].u, &s[j].x, s[j].dx, w.a, s[j].rho - x0 - lambda * dt - w.shift);
            records.push(PairRecord { t1: s[i].t, t2: s[j].t, lhs, rhs: rhs[i], margin: rhs[i] - lhs });
        }
    }
    Ok(MonotonicityReport::from_records("monotonicity_left".into(), x0, lambda, w.a, records))
}

/// The left inequality obtained from the right one applied to
/// `v(t,x) = u(−t,−x)`, converted back with `φ(x) = π − φ(−x)` and the
/// measured masses.
pub fn monotonicity_left_reflected(
    traj: &Trajectory,
    x0: f64,
    lambda: f64,
    w: &WeightParams,
    stride: usize,
) -> Result<MonotonicityReport> {
    check_mono_params(x0, lambda)?;
    let s = mono_samples(traj, stride)?;
    let reflected: Vec<MonoSample> = s
        .iter()
        .rev()
        .map(|p| MonoSample {
            t: -p.t,
            rho: -p.rho,
            x: p.x.iter().map(|x| -x).collect(),
            u: p.u.clone(),
            dx: p.dx,
            mass: p.mass,
        })
        .collect();
    let m = reflected.len();
    let vr = right_pairs(&reflected, x0, lambda, w.a, w.shift);
    let mut records = Vec::with_capacity(vr.len());
    // reflected pair (i', j') corresponds to original (m-1-j', m-1-i')
    let mut k = 0;
    let mut by_orig = vec![vec![None; m]; m];
    for ip in 0..m {
        for jp in ip..m {
            let r = vr[k];
            k += 1;
            let (i, j) = (m - 1 - jp, m - 1 - ip);
            let (mi, mj) = (s[i].mass, s[j].mass);
            let rhs = PI * mi - r.lhs;
            let lhs = PI * mj - r.rhs;
            by_orig[i][j] = Some(PairRecord { t1: s[i].t, t2: s[j].t, lhs, rhs, margin: r.margin - PI * (mj - mi) });
        }
    }
    for row in by_orig {
        records.extend(row.into_iter().flatten());
    }
    Ok(MonotonicityReport::from_records("monotonicity_left_reflected".into(), x0, lambda, w.a, records))
}

/// `η`-monotonicity with weight `φ(x−x₀) − φ(−x₀)` in the soliton frame:
/// `lhs = ∫η²(t₂)(φ(x−x₀)−φ(−x₀))`,
/// `rhs = ∫η²(t₁)(φ(x−λΔ−x₀)−φ(−λΔ−x₀))`, and `c_meas` is the smallest `C`
/// with `lhs ≤ rhs + C ∫_{t₁}^{t₂} ‖η‖²/(x₀+λ(t₂−t))² dt`.
pub fn eta_monotonicity(
    times: &[f64],
    states: &[ModulationState],
    x0: f64,
    lambda: f64,
    w: &WeightParams,
    stride: usize,
) -> Result<MonotonicityReport> {
    check_mono_params(x0, lambda)?;
    if times.len() != states.len() {
        return Err(invalid("states", "one modulation state per time is required"));
    }
    if stride == 0 {
        return Err(invalid("stride", "must be positive"));
    }
    let a = w.a;
    let idx: Vec<usize> = (0..times.len()).step_by(stride).collect();
    let norms: Vec<f64> = states.iter().map(|s| s.eta.l2_norm_sq()).collect();
    let mass_with = |k: usize, shift: f64| -> f64 {
        let e = &states[k].eta;
        let base = phi(-shift, a);
        weighted_by(e.values(), &e.grid().nodes(), e.grid().spacing(), |x| phi(x - shift, a) - base)
    };
    let lhs: Vec<f64> = idx.iter().map(|&k| mass_with(k, x0)).collect();
    let mut records = Vec::new();
    let mut c_meas: f64 = 0.0;
    for (p, &i) in idx.iter().enumerate() {
        for (q, &j) in idx.iter().enumerate().skip(p) {
            let dt = times[j] - times[i];
            let rhs = mass_with(i, x0 + lambda * dt);
            let ts = &times[i..=j];
            let fs: Vec<f64> =
                (i..=j).map(|k| norms[k] / (x0 + lambda * (times[j] - times[k])).powi(2)).collect();
            let remainder = integrate_samples(ts, &fs);
            let excess = lhs[q] - rhs;
            if excess > 0.0 && remainder > 0.0 {
                c_meas = c_meas.max(excess / remainder);
            }
            records.push(PairRecord { t1: times[i], t2: times[j], lhs: lhs[q], rhs, margin: rhs - lhs[q] });
        }
    }
    let mut rep = MonotonicityReport::from_records("eta_monotonicity".into(), x0, lambda, a, records);
    rep.c_meas = c_meas;
    Ok(rep)
}

/// `sup_x (x₀+λΔt)² Q(x) |φ(x − x₀ − λΔt) − φ(−x₀ − λΔt)|` on `grid`.
pub fn decay_weight_ratio(x0: f64, dt: f64, lambda: f64, a: f64, nodes: &[f64]) -> f64 {
    let r = x0 + lambda * dt;
    let base = phi(-r, a);
    nodes
        .iter()
        .map(|&x| r * r * profiles::q(x) * (phi(x - r, a) - base).abs())
        .fold(0.0, f64::max)
}

/// `‖u − Q_c(· − ρ)‖_{L²(x > t/10)}` with a sharp cutoff on lab-frame nodes.
pub fn localized_distance(u: &Field, c: f64, rho: f64, t: f64) -> Result<f64> {
    let q = profiles::soliton(&SolitonParams::new(c, rho)?, u.grid());
    Ok(localized_distance_to(u, &q, 0.1 * t))
}

/// `‖u − profile‖_{L²(x > cut)}`.
pub fn localized_distance_to(u: &Field, profile: &Field, cut: f64) -> f64 {
    let g = u.grid();
    let s: f64 = (0..g.n())
        .filter(|&j| g.node(j) > cut)
        .map(|j| (u.values()[j] - profile.values()[j]).powi(2))
        .sum();
    (s * g.spacing()).sqrt()
}

/// The sawtooth virial identity for the linear flow.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VirialReport {
    pub a: f64,
    pub t1: f64,
    pub t2: f64,
    /// `∫ψw²(t₂) − ∫ψw²(t₁)` with `ψ = A arctan(x/A)`.
    pub lhs: f64,
    /// Time integral of the exact `ψ`-rate.
    pub rhs: f64,
    pub residual: f64,
    /// Time integral of the `ψ = x` formula
    /// `−∫(2|D^{1/2}w|² + w² + w²(xQ'−Q)) + 2β∫xQ'w`.
    pub rhs_linear_weight: f64,
    /// `−2∫‖D^{1/2}w‖² dt`.
    pub half_derivative_term: f64,
}

impl VirialReport {
    pub fn to_jsonl(&self) -> String {
        json!({"t1": self.t1, "t2": self.t2, "lhs": self.lhs, "rhs": self.rhs, "margin": self.rhs - self.lhs,
               "params": {"A": self.a, "rhs_linear_weight": self.rhs_linear_weight,
                          "half_derivative_term": self.half_derivative_term}})
        .to_string()
            + "\n"
    }
}

/// Checks `d/dt ∫ψw² = −∫ψ'w² − ∫ψQ'w² + ∫ψ'Qw² + 2∫ψw(Dw)_x + 2β∫ψQ'w`
/// integrated over the trajectory, with `A = L/8`.
pub fn virial_linear_w(traj: &Trajectory) -> Result<VirialReport> {
    let betas = traj.beta_series.as_ref().ok_or_else(|| invalid("traj", "virial needs a beta series"))?;
    let g = traj.grid().ok_or_else(|| invalid("traj", "empty trajectory"))?.clone();
    let a = g.length() / 8.0;
    let psi = Field::from_fn(&g, |x| a * (x / a).atan());
    let dpsi = Field::from_fn(&g, |x| 1.0 / (1.0 + (x / a).powi(2)));
    let q = profiles::profile_q(&g);
    let qp = profiles::profile_q_prime(&g);
    let xqp = Field::from_fn(&g, |x| x * profiles::q_prime(x));
    let mut rate = Vec::new();
    let mut rate_x = Vec::new();
    let mut half = Vec::new();
    for (w, &beta) in traj.snapshots.iter().zip(betas) {
        let w2 = w * w;
        let dwx = derivative(&abs_derivative(w), 1);
        let r = -w2.inner(&dpsi) - w2.inner(&(&psi * &qp)) + w2.inner(&(&dpsi * &q))
            + 2.0 * (&psi * w).inner(&dwx)
            + 2.0 * beta * w.inner(&(&psi * &qp));
        let hn = half_norm_sq(w);
        let rx = -(2.0 * hn + w2.integral() + w2.inner(&(&xqp - &q))) + 2.0 * beta * w.inner(&xqp);
        rate.push(r);
        rate_x.push(rx);
        half.push(-2.0 * hn);
    }
    let n = traj.len();
    let lhs = traj.snapshots[n - 1].weighted_square(&psi) - traj.snapshots[0].weighted_square(&psi);
    let rhs = integrate_samples(&traj.times, &rate);
    Ok(VirialReport {
        a,
        t1: traj.times[0],
        t2: traj.times[n - 1],
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        rhs_linear_weight: integrate_samples(&traj.times, &rate_x),
        half_derivative_term: integrate_samples(&traj.times, &half),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub a: f64,
    pub lhs: f64,
    /// `∫ u² φ'`.
    pub weight_mass: f64,
    /// `|lhs| · A / ∫u²φ'`.
    pub ratio_times_a: f64,
}

fn probe(u: &Field, a_list: &[f64], lhs: impl Fn(&Field, &WeightParams) -> f64) -> Result<Vec<ProbeRow>> {
    a_list
        .iter()
        .map(|&a| {
            let w = WeightParams::new(a, 0.0)?;
            let l = lhs(u, &w);
            let m = u.weighted_square(&profiles::phi_prime(&w, u.grid()));
            let ratio = if m == 0.0 { 0.0 } else { l.abs() * a / m };
            Ok(ProbeRow { a, lhs: l, weight_mass: m, ratio_times_a: ratio })
        })
        .collect()
}

/// `∫(Hu_x) u φ'` against `∫u²φ'/A`.
pub fn firstterm_probe(u: &Field, a_list: &[f64]) -> Result<Vec<ProbeRow>> {
    probe(u, a_list, |u, w| (&hilbert(&derivative(u, 1)) * u).inner(&profiles::phi_prime(w, u.grid())))
}

/// `∫(Hu_x) u_x φ` against `∫u²φ'/A`.
pub fn secondterm_probe(u: &Field, a_list: &[f64]) -> Result<Vec<ProbeRow>> {
    probe(u, a_list, |u, w| {
        let ux = derivative(u, 1);
        (&hilbert(&ux) * &ux).inner(&profiles::phi_weight(w, u.grid()))
    })
}

/// `∫|η|³φ' / (‖η‖_{H^{1/2}} ∫η²φ')`, with `0/0` read as 0.
pub fn cubic_weight_bound(eta: &Field, w: &WeightParams) -> Result<f64> {
    let dphi = profiles::phi_prime(w, eta.grid());
    let num = eta.map(|v| v.abs().powi(3)).inner(&dphi);
    if num == 0.0 {
        return Ok(0.0);
    }
    let den = sobolev_norm(eta, 0.5, SobolevKind::Inhomogeneous)? * eta.weighted_square(&dphi);
    Ok(num / den)
}

/// `∫u²φ(x−ρ(t)+0.95t) − ∫u²φ(x−ρ(t)+t/10)`: mass between the two
/// leftward-receding rays, which should vanish as `t` grows.
pub fn decay_gap(traj: &Trajectory, a: f64) -> Result<MonitorSeries> {
    let modu = traj
        .modulation_series
        .as_ref()
        .ok_or_else(|| invalid("traj", "decay gap needs a modulation series"))?;
    let mut out = MonitorSeries::new("decay_gap");
    for i in 0..traj.len() {
        let t = traj.times[i];
        let u = &traj.snapshots[i];
        let x = traj.lab_nodes(i);
        let dx = u.grid().spacing();
        let rho = modu[i].rho;
        let v = weighted_mass_at(u.values(), &x, dx, a, rho - 0.95 * t)
            - weighted_mass_at(u.values(), &x, dx, a, rho - 0.1 * t);
        out.push(t, v);
    }
    Ok(out)
}
