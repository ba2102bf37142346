//! Linearized operators around the soliton: `L = D + 1 − Q`, the scaled
//! `L_c = D + c − Q_c` and the quadratic form `L̃ = 2D + 1 − (xQ' + Q)`,
//! with dense discretizations, spectra and constrained minimization.

use std::fmt::Write as _;

use faer::{Mat, Side};
use rustfft::num_complex::Complex64;

use crate::error::{invalid, BoError, Result};
use crate::profiles::{self, SolitonParams};
use crate::spectral::{abs_derivative, derivative, half_norm_sq, Field, Grid};

/// `L f = D f + f − Q f`.
pub fn apply_l(f: &Field) -> Field {
    let g = f.grid();
    let qf = Field::from_fn(g, profiles::q);
    &abs_derivative(f) + &f.zip_with(&qf, |v, q| v - q * v)
}

/// `L_c f = D f + c f − Q_c f`.
pub fn apply_l_c(f: &Field, c: f64) -> Result<Field> {
    let qc = profiles::soliton(&SolitonParams::new(c, 0.0)?, f.grid());
    Ok(&abs_derivative(f) + &f.zip_with(&qc, |v, q| c * v - q * v))
}

/// Potential `xQ' + Q` of the dual quadratic form.
pub fn ltilde_potential(grid: &Grid) -> Field {
    Field::from_fn(grid, |x| x * profiles::q_prime(x) + profiles::q(x))
}

/// `(L̃z, z) = 2‖D^{1/2}z‖² + ‖z‖² − ∫(xQ' + Q) z²`.
pub fn quadform_ltilde(z: &Field) -> f64 {
    2.0 * half_norm_sq(z) + z.l2_norm_sq() - z.weighted_square(&ltilde_potential(z.grid()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorKind {
    L,
    Lc(f64),
    Ltilde,
}

impl OperatorKind {
    pub fn name(&self) -> String {
        match self {
            OperatorKind::L => "L".into(),
            OperatorKind::Lc(c) => format!("L_c(c={c})"),
            OperatorKind::Ltilde => "Ltilde".into(),
        }
    }
}

/// Inner-product metric for Rayleigh quotients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    L2,
    /// `‖z‖² = Σ (1+|k|)|ẑ|²` with the quadrature weight.
    HalfSobolev,
}

/// Dense symmetric matrix `M` with `zᵀMz ≈ ∫ z (Op z)` (weight `dx` embedded).
pub struct OperatorMatrix {
    grid: Grid,
    kind: OperatorKind,
    entries: Mat<f64>,
}

impl OperatorMatrix {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn entries(&self) -> &Mat<f64> {
        &self.entries
    }

    /// Operator action `M f / dx`.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.grid.ensure_same(f.grid())?;
        let n = self.grid.n();
        let inv_dx = 1.0 / self.grid.spacing();
        let mut out = vec![0.0; n];
        for j in 0..n {
            let fj = f.values()[j];
            let col = self.entries.col_as_slice(j);
            for i in 0..n {
                out[i] += col[i] * fj;
            }
        }
        out.iter_mut().for_each(|v| *v *= inv_dx);
        Field::from_values(&self.grid, out)
    }

    pub fn symmetry_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..j {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)]).abs());
            }
        }
        worst
    }
}

/// Assembles `kind` on `grid`: the translation-invariant part is the
/// circulant built from `D` applied to the first indicator field, the
/// potential is diagonal.
pub fn assemble(kind: OperatorKind, grid: &Grid) -> Result<OperatorMatrix> {
    let n = grid.n();
    if n < 64 {
        return Err(BoError::InvalidGrid(format!("n = {n} too small for spectrum work (need >= 64)")));
    }
    let (d_scale, diag): (f64, Vec<f64>) = match kind {
        OperatorKind::L => (1.0, grid.nodes().iter().map(|&x| 1.0 - profiles::q(x)).collect()),
        OperatorKind::Lc(c) => {
            let qc = profiles::soliton(&SolitonParams::new(c, 0.0)?, grid);
            (1.0, qc.values().iter().map(|q| c - q).collect())
        }
        OperatorKind::Ltilde => {
            let v = ltilde_potential(grid);
            (2.0, v.values().iter().map(|v| 1.0 - v).collect())
        }
    };
    let mut e0 = Field::zeros(grid);
    e0.values_mut()[0] = 1.0;
    let dcol = abs_derivative(&e0).into_values();
    let dx = grid.spacing();
    let mut m = Mat::<f64>::from_fn(n, n, |i, j| {
        let c = dcol[(i + n - j) % n];
        dx * (d_scale * c + if i == j { diag[i] } else { 0.0 })
    });
    symmetrize(&mut m);
    Ok(OperatorMatrix { grid: grid.clone(), kind, entries: m })
}

fn symmetrize(m: &mut Mat<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Eigenpairs of a (constrained) dense problem.
#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub kind: OperatorKind,
    pub metric: Metric,
    pub eigenvalues: Vec<f64>,
    /// Normalised to unit norm in `metric`.
    pub eigenvectors: Vec<Field>,
    /// `‖Op v − λ G v‖_{L²} / ‖v‖_{L²}` for each reported pair.
    pub residuals: Vec<f64>,
    pub constraint_set: Vec<Field>,
    pub rayleigh_min: f64,
}

impl SpectrumReport {
    /// `|⟨v_i, p⟩| / (‖v_i‖ ‖p‖)`.
    pub fn correlation(&self, i: usize, profile: &Field) -> f64 {
        correlation(&self.eigenvectors[i], profile)
    }

    pub fn to_text(&self, named: &[(&str, &Field)]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "operator: {}", self.kind.name());
        let _ = writeln!(s, "metric: {:?}", self.metric);
        let _ = writeln!(s, "constraints: {}", self.constraint_set.len());
        for (i, c) in self.constraint_set.iter().enumerate() {
            let names: Vec<String> = named
                .iter()
                .filter(|(_, p)| correlation(c, p) > 0.999999)
                .map(|(n, _)| n.to_string())
                .collect();
            let _ = writeln!(s, "  constraint[{i}] norm={:.6e} matches={:?}", c.l2_norm(), names);
        }
        let _ = writeln!(s, "rayleigh_min: {:.10}", self.rayleigh_min);
        let _ = writeln!(s, "index eigenvalue residual{}", named.iter().map(|(n, _)| format!(" corr_{n}")).collect::<String>());
        for (i, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            let _ = write!(s, "{i} {l:.10} {r:.3e}");
            for (_, p) in named {
                let _ = write!(s, " {:.8}", self.correlation(i, p));
            }
            let _ = writeln!(s);
        }
        s
    }
}

pub fn correlation(a: &Field, b: &Field) -> f64 {
    let na = a.l2_norm();
    let nb = b.l2_norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.inner(b).abs() / (na * nb)
}

/// Lowest `n_lowest` eigenpairs in the `L²` metric.
pub fn spectrum(m: &OperatorMatrix, n_lowest: usize) -> Result<SpectrumReport> {
    constrained_spectrum(m, &[], Metric::L2, n_lowest)
}

/// Minimum of `(Op z, z)` over `⟨z, gᵢ⟩ = 0`, `‖z‖_metric = 1`, reported with
/// the four lowest constrained eigenpairs.
pub fn constrained_rayleigh_min(m: &OperatorMatrix, constraints: &[Field], metric: Metric) -> Result<SpectrumReport> {
    constrained_spectrum(m, constraints, metric, 4)
}

/// Generalised constrained eigenproblem `P A P y = λ P G P y`.
///
/// The Gram matrix `G` is circulant with symbol `1` (L²) or `1+|k|` (H^{1/2});
/// the problem is whitened by `G^{-1/2}` and the constraint directions are
/// removed by Householder reflections before a dense symmetric eigensolve.
pub fn constrained_spectrum(
    m: &OperatorMatrix,
    constraints: &[Field],
    metric: Metric,
    n_lowest: usize,
) -> Result<SpectrumReport> {
    let grid = m.grid.clone();
    let n = grid.n();
    let nc = constraints.len();
    if n_lowest == 0 || n_lowest > n - nc {
        return Err(invalid("n_lowest", format!("must lie in 1..={}", n - nc)));
    }
    for c in constraints {
        grid.ensure_same(c.grid())?;
    }
    let dx = grid.spacing();
    let whiten = |v: &[f64]| -> Vec<f64> {
        match metric {
            Metric::L2 => v.to_vec(),
            Metric::HalfSobolev => gram_inv_sqrt(&grid, v),
        }
    };

    let mut b = Mat::<f64>::from_fn(n, n, |i, j| m.entries[(i, j)] / dx);
    if metric == Metric::HalfSobolev {
        for pass in 0..2 {
            for j in 0..n {
                let col = whiten(b.col_as_slice(j));
                b.col_as_slice_mut(j).copy_from_slice(&col);
            }
            if pass == 0 {
                b = b.transpose().to_owned();
            }
        }
        symmetrize(&mut b);
    }

    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(nc);
    for (i, c) in constraints.iter().enumerate() {
        let mut h = whiten(c.values());
        for v in &reflectors {
            reflect_vec(v, &mut h);
        }
        let tail_norm = h[i..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let head_norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        if tail_norm <= 1e-10 * head_norm.max(f64::MIN_POSITIVE) {
            return Err(BoError::Linalg(format!("constraint {i} is linearly dependent on the previous ones")));
        }
        let mut v = vec![0.0; n];
        v[i..].copy_from_slice(&h[i..]);
        v[i] += h[i].signum() * tail_norm;
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= vn);
        reflect_two_sided(&v, &mut b);
        reflectors.push(v);
    }

    let size = n - nc;
    let sub = Mat::<f64>::from_fn(size, size, |i, j| b[(i + nc, j + nc)]);
    drop(b);
    let evd = sub
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| BoError::Linalg(format!("eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));

    let gram = |v: &Field| -> Field {
        match metric {
            Metric::L2 => v.clone(),
            Metric::HalfSobolev => v.apply_symbol(|k| Complex64::new(1.0 + k.abs(), 0.0)),
        }
    };
    let mut eigenvalues = Vec::with_capacity(n_lowest);
    let mut eigenvectors = Vec::with_capacity(n_lowest);
    let mut residuals = Vec::with_capacity(n_lowest);
    for &idx in order.iter().take(n_lowest) {
        let lambda = s[idx];
        let mut y = vec![0.0; n];
        for i in 0..size {
            y[i + nc] = u[(i, idx)];
        }
        for v in reflectors.iter().rev() {
            reflect_vec(v, &mut y);
        }
        let z: Vec<f64> = whiten(&y).iter().map(|x| x / dx.sqrt()).collect();
        let field = Field::from_values(&grid, z)?;
        let op = m.apply(&field)?;
        let mut r = op.axpy(-lambda, &gram(&field));
        if nc > 0 {
            r = project_out(&r, constraints);
        }
        residuals.push(r.l2_norm() / field.l2_norm());
        eigenvalues.push(lambda);
        eigenvectors.push(field);
    }
    Ok(SpectrumReport {
        kind: m.kind,
        metric,
        rayleigh_min: eigenvalues[0],
        eigenvalues,
        eigenvectors,
        residuals,
        constraint_set: constraints.to_vec(),
    })
}

/// `(1+|k|)^{-1/2}` applied to a grid vector.
fn gram_inv_sqrt(grid: &Grid, v: &[f64]) -> Vec<f64> {
    let mut spec = grid.forward(v);
    for (c, k) in spec.iter_mut().zip(grid.wavenumbers()) {
        *c *= (1.0 + k.abs()).powf(-0.5);
    }
    grid.inverse(spec)
}

fn reflect_vec(v: &[f64], x: &mut [f64]) {
    let d: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    x.iter_mut().zip(v).for_each(|(xi, vi)| *xi -= 2.0 * d * vi);
}

/// `B ← (I − 2vvᵀ) B (I − 2vvᵀ)` for symmetric `B`.
fn reflect_two_sided(v: &[f64], b: &mut Mat<f64>) {
    let n = v.len();
    let mut p = vec![0.0; n];
    for j in 0..n {
        let vj = v[j];
        if vj == 0.0 {
            continue;
        }
        let col = b.col_as_slice(j);
        for i in 0..n {
            p[i] += col[i] * vj;
        }
    }
    let gamma: f64 = v.iter().zip(&p).map(|(a, b)| a * b).sum();
    for j in 0..n {
        let (vj, pj) = (v[j], p[j]);
        let col = b.col_as_slice_mut(j);
        for i in 0..n {
            col[i] += -2.0 * v[i] * pj - 2.0 * p[i] * vj + 4.0 * gamma * v[i] * vj;
        }
    }
}

/// Removes from `r` its `L²` component along the constraints (the Lagrange
/// multiplier directions of the constrained problem).
fn project_out(r: &Field, constraints: &[Field]) -> Field {
    let mut basis: Vec<Field> = Vec::new();
    for c in constraints {
        let mut e = c.clone();
        for b in &basis {
            e = e.axpy(-e.inner(b), b);
        }
        let nrm = e.l2_norm();
        if nrm > 0.0 {
            basis.push(e.scale(1.0 / nrm));
        }
    }
    let mut out = r.clone();
    for b in &basis {
        out = out.axpy(-out.inner(b), b);
    }
    out
}

/// Background quantities for the linear flow `w_t = (Lw)_x + β Q'`.
#[derive(Clone, Debug)]
pub struct LinearBackground {
    pub q: Field,
    pub q_prime: Field,
    /// `L(Q'')` with `Q''` the spectral derivative of the sampled `Q'`.
    pub l_q_second: Field,
    pub q_prime_norm_sq: f64,
}

impl LinearBackground {
    pub fn new(grid: &Grid) -> LinearBackground {
        let q = profiles::profile_q(grid);
        let q_prime = profiles::profile_q_prime(grid);
        let l_q_second = apply_l(&derivative(&q_prime, 1));
        let q_prime_norm_sq = q_prime.l2_norm_sq();
        LinearBackground { q, q_prime, l_q_second, q_prime_norm_sq }
    }

    /// `β = ∫ w L(Q'') / ∫(Q')²`.
    pub fn beta(&self, w: &Field) -> f64 {
        w.inner(&self.l_q_second) / self.q_prime_norm_sq
    }
}

pub fn beta_from_w(w: &Field) -> f64 {
    LinearBackground::new(w.grid()).beta(w)
}

/// Checks for `S_ε = S + εQ`, `T_ε = T − εS`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraversalReport {
    pub eps: f64,
    /// `‖L T_ε − S_ε‖_{L²}`.
    pub residual: f64,
    /// `(L T_ε, T_ε)`.
    pub form_value: f64,
    /// `−2ε (S, S)`.
    pub form_bound: f64,
    /// `(S_ε, T_ε)` by quadrature.
    pub st_product: f64,
    /// `(S,T) + ε(−(S,S) + (T,Q)) − ε²(S,Q)` from quadratures of the pieces.
    pub st_expansion: f64,
    /// Constrained minimum of `L` under `{S_ε}`, when a matrix was supplied.
    pub constrained_min: Option<f64>,
}

pub fn traversal_check(eps: f64, grid: &Grid, matrix: Option<&OperatorMatrix>) -> Result<TraversalReport> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    let q = profiles::profile_q(grid);
    let s = profiles::profile_s(grid);
    let t = profiles::profile_t(grid);
    let s_eps = s.axpy(eps, &q);
    let t_eps = t.axpy(-eps, &s);
    let lt = apply_l(&t_eps);
    let constrained_min = match matrix {
        Some(m) => {
            if m.kind != OperatorKind::L {
                return Err(invalid("matrix", "traversal check needs the assembled L"));
            }
            let s_m = profiles::profile_s(m.grid()).axpy(eps, &profiles::profile_q(m.grid()));
            Some(constrained_rayleigh_min(m, &[s_m], Metric::L2)?.rayleigh_min)
        }
        None => None,
    };
    Ok(TraversalReport {
        eps,
        residual: (&lt - &s_eps).l2_norm(),
        form_value: lt.inner(&t_eps),
        form_bound: -2.0 * eps * s.inner(&s),
        st_product: s_eps.inner(&t_eps),
        st_expansion: s.inner(&t) + eps * (-s.inner(&s) + t.inner(&q)) - eps * eps * s.inner(&q),
        constrained_min,
    })
}

/// Named residuals of the algebraic identities satisfied by `Q`, `S`, `T`
/// (`L²` norms for operator identities, absolute errors for inner products).
pub fn identity_suite(grid: &Grid) -> Vec<(&'static str, f64)> {
    let q = profiles::profile_q(grid);
    let qp = profiles::profile_q_prime(grid);
    let s = profiles::profile_s(grid);
    let t = profiles::profile_t(grid);
    let q2 = &q * &q;
    let hqp = crate::spectral::hilbert(&derivative(&q, 1));
    let soliton_eq = &(&(-&hqp) + &q) - &q2.scale(0.5);
    vec![
        ("soliton_equation", soliton_eq.l2_norm()),
        ("l_q_prime", apply_l(&qp).l2_norm()),
        ("l_s_plus_q", (&apply_l(&s) + &q).l2_norm()),
        ("l_t_minus_s", (&apply_l(&t) - &s).l2_norm()),
        ("l_q_plus_half_q2", (&apply_l(&q) + &q2.scale(0.5)).l2_norm()),
        ("s_plus_hilbert_q_prime", (&s + &hqp).l2_norm()),
        ("sq_minus_half_q2", (s.inner(&q) - 0.5 * q.l2_norm_sq()).abs()),
        ("st", s.inner(&t).abs()),
        ("tq_plus_s2", (t.inner(&q) + s.l2_norm_sq()).abs()),
    ]
}
