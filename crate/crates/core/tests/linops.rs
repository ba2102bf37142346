use bolab::lab::perturbation::random_bandlimited;
use bolab::linops::{
    apply_l, apply_l_c, assemble, ltilde_potential, beta_from_w, constrained_rayleigh_min, quadform_ltilde, spectrum, traversal_check,
    LinearBackground, Metric, OperatorKind,
};
use bolab::profiles::{self, soliton, SolitonParams};
use bolab::spectral::{derivative, half_norm_sq};
use bolab::{BoError, Field, Grid};
use proptest::prelude::*;

fn small() -> Grid {
    Grid::new(256, 64.0).unwrap()
}

#[test]
fn matrix_matches_operator_action() {
    let g = small();
    for kind in [OperatorKind::L, OperatorKind::Lc(1.7), OperatorKind::Ltilde] {
        let m = assemble(kind, &g).unwrap();
        assert!(m.symmetry_defect() < 1e-10);
        let f = random_bandlimited(&g, 3.0, 11);
        let direct = match kind {
            OperatorKind::L => apply_l(&f),
            OperatorKind::Lc(c) => apply_l_c(&f, c).unwrap(),
            OperatorKind::Ltilde => {
                let v = ltilde_potential(&g);
                &bolab::spectral::abs_derivative(&f).scale(2.0) + &f.zip_with(&v, |a, p| a - p * a)
            }
        };
        let err = (&m.apply(&f).unwrap() - &direct).max_abs();
        assert!(err < 1e-8 * direct.max_abs().max(1.0), "{}: {err}", kind.name());
    }
}

#[test]
fn scaled_operator_reduces_and_annihilates_translation_mode() {
    let g = small();
    let f = random_bandlimited(&g, 2.0, 5);
    assert!((&apply_l_c(&f, 1.0).unwrap() - &apply_l(&f)).max_abs() < 1e-13);
    // The c = 2 profile has half-width 1/2, so a finer spacing is needed.
    let fine = Grid::new(524_288, 16_384.0).unwrap();
    for c in [0.5, 2.0] {
        let qc = soliton(&SolitonParams::new(c, 0.0).unwrap(), &fine);
        let r = apply_l_c(&derivative(&qc, 1), c).unwrap();
        assert!(r.l2_norm() < 1e-6, "c = {c}: {}", r.l2_norm());
    }
}

#[test]
fn dual_form_examples() {
    let g = Grid::new(4096, 400.0).unwrap();
    assert_eq!(quadform_ltilde(&Field::zeros(&g)), 0.0);
    // High mode: the potential xQ' + Q = S is bounded by 4 in absolute value.
    let k = 2.0 * std::f64::consts::PI * 1600.0 / g.length();
    let z = Field::from_fn(&g, |x| (k * x).cos());
    let nz = z.l2_norm_sq();
    let v = quadform_ltilde(&z);
    assert!((v - (2.0 * k + 1.0) * nz).abs() <= 4.0 * nz, "{v}");
    assert!(g.nodes().iter().all(|&x| x * profiles::q_prime(x) <= 0.0));
    for seed in 0..10 {
        let z = random_bandlimited(&g, 4.0, seed);
        let lz = apply_l(&z).inner(&z);
        assert!(quadform_ltilde(&z) >= half_norm_sq(&z) + lz - 1e-10 * nz.max(1.0));
    }
}

#[test]
fn small_grids_rejected() {
    let g = Grid::new(32, 10.0).unwrap();
    assert!(matches!(assemble(OperatorKind::L, &g), Err(BoError::InvalidGrid(_))));
}

#[test]
fn spectrum_has_three_isolated_eigenvalues() {
    let g = Grid::new(1024, 200.0).unwrap();
    let m = assemble(OperatorKind::L, &g).unwrap();
    let rep = spectrum(&m, 6).unwrap();
    let below: Vec<f64> = rep.eigenvalues.iter().cloned().filter(|&l| l < 0.95).collect();
    assert_eq!(below.len(), 3, "{:?}", rep.eigenvalues);
    assert!(rep.eigenvalues[3..].iter().all(|&l| l >= 0.95));
    assert!((rep.eigenvalues[0] + 0.5 * (1.0 + 5f64.sqrt())).abs() < 1e-3);
    assert!(rep.eigenvalues[1].abs() < 1e-3);
    assert!((rep.eigenvalues[2] - 0.5 * (5f64.sqrt() - 1.0)).abs() < 1e-3);
    assert!(rep.residuals.iter().all(|&r| r < 1e-8), "{:?}", rep.residuals);
    assert!((rep.rayleigh_min - rep.eigenvalues[0]).abs() < 1e-10);

    let q = profiles::profile_q(&g);
    let qp = profiles::profile_q_prime(&g);
    let cons = constrained_rayleigh_min(&m, &[q, qp], Metric::L2).unwrap();
    assert!(cons.rayleigh_min >= 0.25, "{}", cons.rayleigh_min);
    let lt = assemble(OperatorKind::Ltilde, &g).unwrap();
    let dual = constrained_rayleigh_min(&lt, &[profiles::profile_s(&g)], Metric::HalfSobolev).unwrap();
    assert!(dual.rayleigh_min >= 0.1, "{}", dual.rayleigh_min);
}

#[test]
fn beta_examples() {
    let g = Grid::new(4096, 400.0).unwrap();
    let bg = LinearBackground::new(&g);
    let want = bg.l_q_second.l2_norm_sq() / bg.q_prime_norm_sq;
    assert!((beta_from_w(&bg.l_q_second) - want).abs() < 1e-12 * want);
    // Q' has the opposite parity of L(Q'').
    assert!(beta_from_w(&bg.q_prime).abs() < 1e-12);
    let (a, b) = (random_bandlimited(&g, 2.0, 1), random_bandlimited(&g, 2.0, 2));
    let lin = bg.beta(&a.axpy(-3.0, &b)) - (bg.beta(&a) - 3.0 * bg.beta(&b));
    assert!(lin.abs() < 1e-12);
}

#[test]
fn traversal_examples() {
    let fine = Grid::new(262_144, 32_768.0).unwrap();
    let rep = traversal_check(0.1, &fine, None).unwrap();
    assert!((rep.st_product - rep.st_expansion).abs() < 1e-6, "{rep:?}");
    assert!(rep.residual < 1e-5, "{}", rep.residual);
    assert!(rep.form_value <= rep.form_bound + 1e-5, "{rep:?}");
    let g = Grid::new(1024, 200.0).unwrap();
    let m = assemble(OperatorKind::L, &g).unwrap();
    for eps in [0.01, 0.1] {
        let r = traversal_check(eps, &g, Some(&m)).unwrap();
        let v = r.constrained_min.unwrap();
        assert!(v >= -1e-6, "eps = {eps}: {v}");
    }
    assert!(traversal_check(0.0, &g, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operators_self_adjoint(s1 in 0u64..10_000, s2 in 0u64..10_000, c in 0.3f64..3.0) {
        let g = small();
        let (f, h) = (random_bandlimited(&g, 3.0, s1), random_bandlimited(&g, 3.0, s2));
        let scale = f.l2_norm() * h.l2_norm();
        prop_assert!((apply_l(&f).inner(&h) - f.inner(&apply_l(&h))).abs() <= 1e-9 * scale.max(1.0));
        let lc = |v: &Field| apply_l_c(v, c).unwrap();
        prop_assert!((lc(&f).inner(&h) - f.inner(&lc(&h))).abs() <= 1e-9 * scale.max(1.0));
    }
}
