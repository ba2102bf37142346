use bolab::evolution::Trajectory;
use bolab::modulation::{c_from_mass, estimate_c_plus, fit_translation, multisoliton_decompose, rho_dot_estimate};
use bolab::profiles::{self, multisoliton_sum, soliton, SolitonParams};
use bolab::{BoError, Field, Grid};
use proptest::prelude::*;

fn sp(c: f64, x0: f64) -> SolitonParams {
    SolitonParams::new(c, x0).unwrap()
}

fn grid() -> Grid {
    Grid::new(4096, 400.0).unwrap()
}

#[test]
fn exact_two_soliton_sum_is_recovered() {
    let g = Grid::new(8192, 800.0).unwrap();
    let truth = [sp(1.0, 0.0), sp(2.0, 100.0)];
    let u = multisoliton_sum(&truth, &g, 50.0).unwrap();
    let guesses = [sp(1.02, 0.3), sp(1.97, 99.8)];
    let states = multisoliton_decompose(&u, &guesses, 50.0).unwrap();
    for (s, t) in states.iter().zip(&truth) {
        assert!((s.c - t.c).abs() < 1e-8);
        assert!((s.rho - t.x0).abs() < 1e-8);
    }
}

#[test]
fn translated_soliton_is_located() {
    let g = grid();
    let u = soliton(&sp(1.0, 0.3), &g);
    let s = fit_translation(&u, 1.0, 0.0).unwrap();
    assert!((s.rho - 0.3).abs() < 1e-10, "{}", s.rho);
}

#[test]
fn centered_inputs() {
    let g = grid();
    let q = profiles::profile_q(&g);
    let s = fit_translation(&q, 1.0, 0.0).unwrap();
    assert!(s.rho.abs() < 1e-12 && s.newton_iters <= 2, "{} {}", s.rho, s.newton_iters);
    assert!(s.eta.max_abs() < 1e-12);
    let even = &q + &Field::from_fn(&g, |x| 0.1 * (-x * x).exp());
    assert!(fit_translation(&even, 1.0, 0.05).unwrap().rho.abs() < 1e-10);
}

#[test]
fn recomposition_and_mass_identity() {
    let g = grid();
    let q = profiles::profile_q(&g);
    let v = &q.translate(1.5) + &Field::from_fn(&g, |x| 0.2 * x * (-(x - 1.0) * (x - 1.0)).exp());
    let u = v.scale(q.l2_norm() / v.l2_norm());
    let s = fit_translation(&u, 1.0, 1.4).unwrap();
    let err = (&s.recompose().unwrap() - &u).max_abs();
    // Translation by a non-grid amount drops the sine part of the Nyquist mode.
    assert!(err < 1e-10, "{err}");
    // Equal mass with c = 1: ∫η² = −2∫ηQ.
    let lhs = s.eta.l2_norm_sq();
    let rhs = -2.0 * s.eta.inner(&q);
    assert!((lhs - rhs).abs() < 1e-10, "{lhs} {rhs}");
    assert!((c_from_mass(&u) - c_from_mass(&q)).abs() < 1e-12);
}

#[test]
fn rho_dot_of_exact_soliton_is_its_speed() {
    let g = grid();
    for c in [0.7, 1.0, 1.6] {
        let s = fit_translation(&soliton(&sp(c, -2.0), &g), c, -2.1).unwrap();
        assert!((rho_dot_estimate(&s).unwrap() - c).abs() < 1e-9);
    }
}

#[test]
fn asymptotic_speed_of_synthetic_soliton() {
    let g = Grid::new(8192, 1000.0).unwrap();
    let mut traj = Trajectory::new(0.0);
    let mut zeros = Trajectory::new(0.0);
    for i in 0..=40 {
        let t = 10.0 * i as f64;
        // The soliton runs at speed 1 while the weight moves at 1/10.
        traj.push(t, soliton(&sp(1.0, t), &g));
        zeros.push(t, Field::zeros(&g));
    }
    let est = estimate_c_plus(&traj, 2.0).unwrap();
    assert!((est - 1.0).abs() < 0.02, "{est}");
    assert_eq!(estimate_c_plus(&zeros, 2.0).unwrap(), 0.0);
    assert!(estimate_c_plus(&Trajectory::new(0.0), 2.0).is_err());
}

#[test]
fn single_soliton_decomposition_matches_fit() {
    let g = grid();
    let u = soliton(&sp(1.3, 2.0), &g);
    let joint = multisoliton_decompose(&u, &[sp(1.25, 2.2)], 50.0).unwrap();
    assert_eq!(joint.len(), 1);
    assert!((joint[0].c - 1.3).abs() < 1e-10 && (joint[0].rho - 2.0).abs() < 1e-10);
    let fixed = fit_translation(&u, 1.3, 2.2).unwrap();
    assert!((fixed.rho - joint[0].rho).abs() < 1e-10);
}

#[test]
fn collisions_are_reported() {
    let g = Grid::new(8192, 800.0).unwrap();
    let u = multisoliton_sum(&[sp(1.0, 0.0), sp(2.0, 60.0)], &g, 50.0).unwrap();
    let r = multisoliton_decompose(&u, &[sp(1.0, 0.0), sp(2.0, 60.0)], 200.0);
    assert!(matches!(r, Err(BoError::Collision { .. })), "{r:?}");
    assert!(multisoliton_decompose(&u, &[], 50.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fit_is_translation_equivariant(a in -20.0f64..20.0, seed in 0u64..1000) {
        let g = grid();
        let bump = bolab::lab::perturbation::random_bandlimited(&g, 1.0, seed);
        let env = Field::from_fn(&g, |x| (-x * x / 8.0).exp());
        let u = &profiles::profile_q(&g) + &(&bump * &env).scale(0.05 / bump.max_abs().max(1e-300));
        let base = fit_translation(&u, 1.0, 0.0).unwrap();
        let moved = fit_translation(&u.translate(a), 1.0, a).unwrap();
        prop_assert!((moved.rho - base.rho - a).abs() < 1e-9, "{} {} {}", moved.rho, base.rho, a);
    }
}
