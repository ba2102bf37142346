use std::f64::consts::PI;

use bolab::evolution::{run, run_linear_w, BetaMode, StepperConfig, Trajectory};
use bolab::modulation::attach_modulation;
use bolab::monitors::{
    cubic_weight_bound, decay_weight_ratio, firstterm_probe, kato_residual, localized_distance, monotonicity_left,
    monotonicity_left_reflected, monotonicity_right, secondterm_probe, virial_linear_w, weighted_mass,
};
use bolab::profiles::{self, soliton, SolitonParams, WeightParams};
use bolab::spectral::half_norm_sq;
use bolab::{Field, Grid};

fn grid() -> Grid {
    Grid::new(4096, 400.0).unwrap()
}

fn soliton_run(horizon: f64, cadence: f64) -> Trajectory {
    let g = grid();
    let mut traj = run(&profiles::profile_q(&g), horizon, &StepperConfig::with_dt(1e-3), cadence).unwrap();
    attach_modulation(&mut traj, 1.0, 0.0).unwrap();
    traj
}

#[test]
fn weighted_mass_limits() {
    let g = grid();
    let u = Field::from_fn(&g, |x| (-x * x).exp());
    let m = u.l2_norm_sq();
    let far_left = WeightParams::new(3.0, -1e9).unwrap();
    let far_right = WeightParams::new(3.0, 1e9).unwrap();
    assert!((weighted_mass(&u, &far_left) - PI * m).abs() < 1e-8 * m);
    assert!(weighted_mass(&u, &far_right) < 1e-8 * m);
    // φ(x) + φ(−x) = π with an even field.
    let centered = weighted_mass(&u, &WeightParams::new(3.0, 0.0).unwrap());
    assert!((centered - 0.5 * PI * m).abs() < 1e-12);
}

#[test]
fn kato_identity_holds_along_soliton() {
    let traj = soliton_run(1.0, 0.01);
    for shift in [-5.0, 0.0, 5.0] {
        let s = kato_residual(&traj, &WeightParams::new(5.0, shift).unwrap()).unwrap();
        assert_eq!(s.values.len(), traj.len() - 2);
        assert!(s.max() < 1e-5, "shift {shift}: {}", s.max());
    }
}

#[test]
fn left_inequality_direct_and_reflected_agree() {
    let traj = soliton_run(3.0, 0.1);
    let w = WeightParams::new(2.0, 0.0).unwrap();
    let direct = monotonicity_left(&traj, 5.0, 0.1, &w, 3).unwrap();
    let refl = monotonicity_left_reflected(&traj, 5.0, 0.1, &w, 3).unwrap();
    assert_eq!(direct.records.len(), refl.records.len());
    for (a, b) in direct.records.iter().zip(&refl.records) {
        assert_eq!((a.t1, a.t2), (b.t1, b.t2));
        assert!((a.lhs - b.lhs).abs() < 1e-10 && (a.rhs - b.rhs).abs() < 1e-10, "{a:?} {b:?}");
    }
    assert!((direct.c_meas - refl.c_meas).abs() < 1e-8);
}

#[test]
fn soliton_monotonicity_constant_is_bounded() {
    let traj = soliton_run(5.0, 0.1);
    let a = 2.0;
    let w = WeightParams::new(a, 0.0).unwrap();
    let bound = a * traj.snapshots[0].l2_norm_sq();
    for x0 in [5.0, 10.0, 20.0] {
        let r = monotonicity_right(&traj, x0, 0.1, &w, 2).unwrap();
        let l = monotonicity_left(&traj, x0, 0.1, &w, 2).unwrap();
        assert!(r.c_meas.is_finite() && r.c_meas <= bound, "{}", r.c_meas);
        assert!(l.c_meas.is_finite() && l.c_meas <= bound, "{}", l.c_meas);
        // Diagonal pairs compare a quantity with itself.
        assert!(r.records.iter().filter(|p| p.t1 == p.t2).all(|p| p.margin.abs() < 1e-12));
    }
    assert!(monotonicity_right(&traj, 0.5, 0.1, &w, 1).is_err());
    assert!(monotonicity_right(&traj, 5.0, 1.0, &w, 1).is_err());
    assert!(monotonicity_right(&Trajectory::new(0.0), 5.0, 0.1, &w, 1).is_err());
}

#[test]
fn localized_distance_examples() {
    let g = grid();
    let p = SolitonParams::new(1.4, 3.0).unwrap();
    let u = soliton(&p, &g);
    assert_eq!(localized_distance(&u, 1.4, 3.0, 10.0).unwrap(), 0.0);
    // Cut to the left of the whole domain: the full norm.
    let full = localized_distance(&Field::zeros(&g), 1.4, 3.0, -4000.0).unwrap();
    assert!((full - u.l2_norm()).abs() < 1e-12);
    let cut = localized_distance(&Field::zeros(&g), 1.4, 3.0, 30.0).unwrap();
    assert!(cut < full && cut > 0.0);
}

#[test]
fn virial_of_zero_flow() {
    let g = Grid::new(1024, 200.0).unwrap();
    let traj = run_linear_w(&Field::zeros(&g), BetaMode::ClosedLoop, 0.5, &StepperConfig::with_dt(1e-2), 0.1).unwrap();
    let v = virial_linear_w(&traj).unwrap();
    assert_eq!((v.lhs, v.rhs, v.residual), (0.0, 0.0, 0.0));
    assert_eq!(v.a, 25.0);
    assert!(virial_linear_w(&soliton_run(0.1, 0.1)).is_err());
}

#[test]
fn probe_rows_and_wide_weight_limit() {
    let g = Grid::new(16_384, 4000.0).unwrap();
    let zero = firstterm_probe(&Field::zeros(&g), &[2.0]).unwrap();
    assert_eq!((zero[0].lhs, zero[0].ratio_times_a), (0.0, 0.0));
    let u = Field::from_fn(&g, |x| (-(x - 1.0) * (x - 1.0) / 2.0).exp() * (1.0 + 0.5 * (2.0 * x).sin()));
    let a_list = [2.0, 10.0, 50.0];
    for rows in [firstterm_probe(&u, &a_list).unwrap(), secondterm_probe(&u, &a_list).unwrap()] {
        for r in &rows {
            assert!(r.ratio_times_a.is_finite() && r.weight_mass > 0.0);
        }
    }
    // For A much wider than the field Aφ' → 1, so A∫(Hu_x)uφ' → ∫(Hu_x)u = −‖D^{1/2}u‖².
    let wide = firstterm_probe(&u, &[500.0]).unwrap();
    let limit = -half_norm_sq(&u);
    assert!((500.0 * wide[0].lhs - limit).abs() < 1e-3 * limit.abs(), "{wide:?} {limit}");
}

#[test]
fn cubic_bound_is_scale_invariant() {
    let g = grid();
    let w = WeightParams::new(4.0, 1.0).unwrap();
    assert_eq!(cubic_weight_bound(&Field::zeros(&g), &w).unwrap(), 0.0);
    let eta = Field::from_fn(&g, |x| (-x * x / 3.0).exp() * (1.0 + x / 4.0));
    let base = cubic_weight_bound(&eta, &w).unwrap();
    for s in [1e-3, 0.5, 7.0] {
        let v = cubic_weight_bound(&eta.scale(s), &w).unwrap();
        assert!((v - base).abs() < 1e-10 * base, "{s}: {v} vs {base}");
    }
}

#[test]
fn decay_weight_ratio_stays_bounded() {
    let nodes = Grid::new(65_536, 16_384.0).unwrap().nodes();
    let a = 2.0;
    // |φ(x−r) − φ(−r)| ≤ |x| sup φ' near −r gives r²Q|x|A/r² ≤ 2A; where x is
    // comparable to r the difference is at most π and r²Q ≤ 4.
    for x0 in [10.0, 100.0, 1000.0] {
        let v = decay_weight_ratio(x0, 5.0, 0.1, a, &nodes);
        assert!(v > 0.0 && v <= 2.0 * a + 4.0 * PI, "{x0}: {v}");
    }
}
