use std::f64::consts::PI;

use bolab::evolution::{invariants, run, run_linear_w, step_bo, step_eta, BetaMode, Scheme, StepperConfig};
use bolab::linops::apply_l;
use bolab::lab::perturbation::random_bandlimited;
use bolab::profiles::{self, soliton, SolitonParams};
use bolab::spectral::derivative;
use bolab::{BoError, Field, Grid};

fn bump(g: &Grid) -> Field {
    Field::from_fn(g, |x| 0.3 * (-(x - 4.0) * (x - 4.0) / 4.0).exp())
}

#[test]
fn constant_state_is_stationary() {
    let g = Grid::new(256, 50.0).unwrap();
    let u0 = Field::constant(&g, 0.7);
    let traj = run(&u0, 0.5, &StepperConfig::with_dt(1e-2), 0.1).unwrap();
    assert!((traj.last().unwrap() - &u0).max_abs() < 1e-13);
}

#[test]
fn small_single_mode_follows_linear_dispersion() {
    let g = Grid::new(256, 2.0 * PI * 8.0).unwrap();
    let k = 5.0 / 8.0;
    let eps = 1e-6;
    let t_end = 2.0;
    let u0 = Field::from_fn(&g, |x| eps * (k * x).cos());
    let traj = run(&u0, t_end, &StepperConfig::with_dt(1e-3), 0.5).unwrap();
    // û_t = ik|k| û moves cos(kx) to cos(kx + k|k|t).
    let want = Field::from_fn(&g, |x| eps * (k * x + k * k * t_end).cos());
    let err = (traj.last().unwrap() - &want).max_abs();
    assert!(err < 1e-10, "{err}");
}

#[test]
fn invariants_of_scaled_solitons() {
    let g = Grid::new(524_288, 16_384.0).unwrap();
    for c in [0.5, 1.0, 2.0] {
        let inv = invariants(&soliton(&SolitonParams::new(c, 0.0).unwrap(), &g));
        assert!((inv.mass - 8.0 * PI * c).abs() < 1e-6, "c = {c}: {inv:?}");
        assert!((inv.energy + 4.0 * PI * c * c).abs() < 1e-6, "c = {c}: {inv:?}");
    }
    let zero = invariants(&Field::zeros(&g));
    assert_eq!((zero.mass, zero.energy), (0.0, 0.0));
}

#[test]
fn reversed_reflected_run_returns_to_start() {
    let g = Grid::new(1024, 200.0).unwrap();
    let u0 = &profiles::profile_q(&g) + &bump(&g);
    let cfg = StepperConfig::with_dt(1e-3);
    let fwd = run(&u0, 1.0, &cfg, 1.0).unwrap();
    let back = run(&fwd.last().unwrap().reflect(), 1.0, &cfg, 1.0).unwrap();
    let err = (&back.last().unwrap().reflect() - &u0).max_abs();
    assert!(err < 1e-8, "{err}");
}

#[test]
fn schemes_agree_and_runs_are_deterministic() {
    let g = Grid::new(1024, 200.0).unwrap();
    let u0 = &profiles::profile_q(&g) + &bump(&g);
    let etd = StepperConfig::with_dt(1e-3);
    let ifr = StepperConfig { scheme: Scheme::IfRk4, ..etd };
    let a = run(&u0, 1.0, &etd, 0.5).unwrap();
    let b = run(&u0, 1.0, &ifr, 0.5).unwrap();
    let again = run(&u0, 1.0, &etd, 0.5).unwrap();
    assert!((a.last().unwrap() - b.last().unwrap()).max_abs() < 1e-8);
    assert_eq!(a.times, again.times);
    for (x, y) in a.snapshots.iter().zip(&again.snapshots) {
        assert_eq!(x.values(), y.values());
    }
}

#[test]
fn eta_step_is_consistent_with_comoving_bo_step() {
    let g = Grid::new(262_144, 32_768.0).unwrap();
    let cfg = StepperConfig { frame_speed: 1.0, ..StepperConfig::with_dt(1e-3) };
    let zero = step_eta(&Field::zeros(&g), 1.0, &cfg).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
    let q = profiles::profile_q(&g);
    let eta0 = bump(&g);
    let u1 = step_bo(&(&q + &eta0), &cfg).unwrap();
    let eta1 = step_eta(&eta0, 1.0, &cfg).unwrap();
    let err = (&(&u1 - &q) - &eta1).max_abs();
    assert!(err < 1e-7, "{err}");
}

#[test]
fn linear_flow_conserves_pairings() {
    let g = Grid::new(2048, 200.0).unwrap();
    let q = profiles::profile_q(&g);
    let qp = profiles::profile_q_prime(&g);
    let env = Field::from_fn(&g, |x| (-x * x / 50.0).exp());
    let w0 = &random_bandlimited(&g, 2.0, 3) * &env;
    let traj = run_linear_w(&w0, BetaMode::ClosedLoop, 2.0, &StepperConfig::with_dt(1e-3), 0.5).unwrap();
    assert_eq!(traj.beta_series.as_ref().unwrap().len(), traj.len());
    for w in &traj.snapshots {
        assert!((w.inner(&q) - w0.inner(&q)).abs() < 1e-8);
        assert!((w.inner(&qp) - w0.inner(&qp)).abs() < 1e-8);
    }
    // Q' is stationary for the open-loop flow up to the torus defect of LQ';
    // d/dt ∫wQ = −∫(Lw) Q_x, with Q_x the spectral derivative of the sampled Q.
    let still = run_linear_w(&qp, BetaMode::Zero, 1.0, &StepperConfig::with_dt(1e-3), 1.0).unwrap();
    let drift = still.last().unwrap().inner(&q) - qp.inner(&q);
    let predicted = -apply_l(&qp).inner(&derivative(&q, 1));
    assert!((drift - predicted).abs() < 0.05 * predicted.abs(), "{drift} vs {predicted}");
    assert!((still.last().unwrap() - &qp).max_abs() < 1e-4);
}

#[test]
fn blowup_keeps_partial_trajectory() {
    let g = Grid::new(256, 50.0).unwrap();
    let mut u0 = profiles::profile_q(&g);
    u0.values_mut()[7] = f64::NAN;
    let err = run(&u0, 1.0, &StepperConfig::with_dt(1e-2), 0.1).unwrap_err();
    assert!(matches!(err.source, BoError::Blowup { .. }));
    assert_eq!(err.partial.len(), 1);

    let big = profiles::profile_q(&g).scale(200.0);
    let cfg = StepperConfig { dealias: false, ..StepperConfig::with_dt(0.05) };
    let err = run(&big, 50.0, &cfg, 0.05).unwrap_err();
    assert!(matches!(err.source, BoError::Blowup { .. }));
    assert!(!err.partial.is_empty());
    assert!(err.partial.snapshots.iter().all(|f| f.values().iter().all(|v| v.is_finite())));
}

#[test]
fn invalid_settings_rejected() {
    let g = Grid::new(256, 50.0).unwrap();
    let u0 = profiles::profile_q(&g);
    assert!(step_bo(&u0, &StepperConfig::with_dt(0.0)).is_err());
    assert!(run(&u0, 1.0, &StepperConfig::with_dt(1e-2), 0.015).is_err());
}
