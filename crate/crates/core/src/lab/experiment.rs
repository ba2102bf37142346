//! Named pipelines: construct initial data, evolve, modulate, monitor,
//! serialize.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use super::config::{Experiment, ExperimentConfig};
use super::fieldio::serialize_field;
use super::manifest::{file_entry, RunManifest};
use super::metrics::emit_metrics;
use super::perturbation::build_perturbation;
use crate::error::Result;
use crate::evolution::{self, Trajectory};
use crate::linops::{self, Metric, OperatorKind};
use crate::modulation;
use crate::monitors::{self, MonitorSeries};
use crate::profiles::{self, SolitonParams, WeightParams, CLOSED_FORM};
use crate::spectral::{sobolev_norm, Field, Grid, SobolevKind};

/// Everything a pipeline produces before it is written to disk.
#[derive(Default)]
pub struct RunOutput {
    pub series: Vec<MonitorSeries>,
    pub reports: String,
    pub summary: BTreeMap<String, f64>,
    pub outcome: Option<String>,
    pub fields: Vec<(String, Field)>,
    pub texts: Vec<(String, String)>,
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// Runs the configured pipeline and writes its outputs into `out_dir`.
///
/// Modulation failures and blowups end the pipeline early and are recorded
/// in the manifest outcome; only configuration and I/O problems are errors.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    let started = now_ms();
    std::fs::create_dir_all(out_dir.join("fields"))?;
    let out = execute(cfg)?;

    let mut rel_paths = Vec::new();
    std::fs::write(out_dir.join("config.toml"), cfg.to_toml_string())?;
    rel_paths.push("config.toml".to_string());
    for (name, f) in &out.fields {
        let rel = format!("fields/{name}.bof");
        serialize_field(f, &out_dir.join(&rel))?;
        rel_paths.push(rel);
    }
    emit_metrics(&out.series, out_dir)?;
    rel_paths.push("metrics.jsonl".into());
    rel_paths.push("metrics.csv".into());
    if !out.reports.is_empty() {
        std::fs::write(out_dir.join("reports.jsonl"), &out.reports)?;
        rel_paths.push("reports.jsonl".into());
    }
    for (name, text) in &out.texts {
        std::fs::write(out_dir.join(name), text)?;
        rel_paths.push(name.clone());
    }
    let files = rel_paths.iter().map(|r| file_entry(out_dir, r)).collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        experiment: format!("{:?}", cfg.experiment),
        config: cfg.to_toml_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        outcome: out.outcome.unwrap_or_else(|| "completed".into()),
        files,
        summary: out.summary,
    };
    manifest.write_atomic(out_dir)?;
    Ok(manifest)
}

/// Runs the pipeline in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match cfg.experiment {
        Experiment::SolitonTranslate => soliton_translate(cfg),
        Experiment::Stability | Experiment::Asymptotic | Experiment::MonotonicitySweep => perturbed_soliton(cfg),
        Experiment::Multisoliton => multisoliton(cfg),
        Experiment::Spectrum => spectrum(cfg),
        Experiment::IdentitySuite => identity_suite(cfg),
    }
}

/// Evolves and converts an abort into a recorded outcome.
fn evolve(cfg: &ExperimentConfig, u0: &Field, out: &mut RunOutput) -> Trajectory {
    match evolution::run(u0, cfg.horizon, &cfg.stepper(), cfg.cadence) {
        Ok(t) => t,
        Err(a) => {
            out.outcome = Some(format!("aborted: {}", a.source));
            a.partial
        }
    }
}

fn invariant_series(traj: &Trajectory, out: &mut RunOutput) {
    let mut mass = MonitorSeries::new("mass");
    let mut energy = MonitorSeries::new("energy");
    for (t, inv) in traj.times.iter().zip(&traj.invariant_series) {
        mass.push(*t, inv.mass);
        energy.push(*t, inv.energy);
    }
    if let (Some(m0), Some(m1)) = (mass.values.first(), mass.values.last()) {
        out.summary.insert("mass_drift_rel".into(), ((m1 - m0) / m0).abs());
    }
    if let (Some(e0), Some(e1)) = (energy.values.first(), energy.values.last()) {
        out.summary.insert("energy_drift_rel".into(), ((e1 - e0) / e0).abs());
    }
    out.series.push(mass);
    out.series.push(energy);
}

fn snapshot_fields(cfg: &ExperimentConfig, traj: &Trajectory, out: &mut RunOutput) {
    if let Some(u) = traj.snapshots.first() {
        out.fields.push(("initial".into(), u.clone()));
    }
    if cfg.snapshot_stride > 0 {
        for i in (0..traj.len()).step_by(cfg.snapshot_stride) {
            out.fields.push((format!("snapshot_{i:05}"), traj.snapshots[i].clone()));
        }
    }
    if let Some(u) = traj.last() {
        out.fields.push(("final".into(), u.clone()));
    }
}

/// Snapshot `i` expressed in lab coordinates.
fn lab_field(traj: &Trajectory, i: usize) -> Field {
    let s = traj.frame_speed * traj.times[i];
    if s == 0.0 {
        traj.snapshots[i].clone()
    } else {
        traj.snapshots[i].translate(s)
    }
}

fn soliton_translate(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let grid = cfg.grid()?;
    let p = cfg.solitons()?[0];
    let mut out = RunOutput::default();
    let u0 = &profiles::soliton(&p, &grid) + &build_perturbation(cfg, &grid, &p)?;
    let traj = evolve(cfg, &u0, &mut out);
    let norm = profiles::soliton(&p, &grid).l2_norm();
    let mut err = MonitorSeries::new("shape_error_rel");
    for i in 0..traj.len() {
        let t = traj.times[i];
        let exact = profiles::soliton(&SolitonParams::new(p.c, p.x0 + p.c * t)?, &grid);
        err.push(t, (&lab_field(&traj, i) - &exact).l2_norm() / norm);
    }
    if let Some(v) = err.last() {
        out.summary.insert("relative_drift".into(), v);
    }
    out.series.push(err);
    invariant_series(&traj, &mut out);
    snapshot_fields(cfg, &traj, &mut out);
    Ok(out)
}

fn perturbed_soliton(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let grid = cfg.grid()?;
    let p = cfg.solitons()?[0];
    let mut out = RunOutput::default();
    let eta0 = build_perturbation(cfg, &grid, &p)?;
    let u0 = &profiles::soliton(&p, &grid) + &eta0;
    out.summary.insert("perturbation_h12".into(), sobolev_norm(&eta0, 0.5, SobolevKind::Inhomogeneous)?);
    let c_mass = modulation::c_from_mass(&u0);
    out.summary.insert("c_mass".into(), c_mass);
    let mut traj = evolve(cfg, &u0, &mut out);
    invariant_series(&traj, &mut out);
    snapshot_fields(cfg, &traj, &mut out);

    let states = match modulation::attach_modulation(&mut traj, c_mass, p.x0) {
        Ok(s) => s,
        Err(e) => {
            out.outcome = Some(format!("tube_exit: {e}"));
            return Ok(out);
        }
    };
    let modu = traj.modulation_series.clone().unwrap_or_default();
    let mut rho = MonitorSeries::new("rho");
    let mut eta = MonitorSeries::new("eta_l2");
    let mut tube = MonitorSeries::new("tube_h12");
    let mut loc = MonitorSeries::new("localized_distance");
    for (i, m) in modu.iter().enumerate() {
        rho.push(m.t, m.rho);
        eta.push(m.t, m.eta_norm);
        tube.push(m.t, sobolev_norm(&states[i].eta, 0.5, SobolevKind::Inhomogeneous)?);
        loc.push(m.t, monitors::localized_distance(&lab_field(&traj, i), c_mass, m.rho, m.t)?);
    }
    let peak = loc.max();
    out.summary.insert("tube_h12_max".into(), tube.max());
    out.summary.insert("localized_peak".into(), peak);
    out.summary.insert("localized_final".into(), loc.last().unwrap_or(0.0));
    out.summary.insert("localized_ratio".into(), if peak > 0.0 { loc.last().unwrap_or(0.0) / peak } else { 0.0 });
    let cp = modulation::estimate_c_plus_window(&traj, cfg.cplus_a, cfg.cplus_tail)?;
    let cp2 = modulation::estimate_c_plus_window(&traj, cfg.cplus_a, (2.0 * cfg.cplus_tail).min(1.0))?;
    out.summary.insert("c_plus".into(), cp);
    out.summary.insert("c_plus_rel_err".into(), (cp - c_mass).abs() / c_mass);
    out.summary.insert("c_plus_window_sensitivity".into(), (cp2 - cp).abs() / cp);
    out.series.extend([rho, eta, tube, loc]);

    let w = WeightParams::new(cfg.weight_a, 0.0)?;
    match cfg.experiment {
        Experiment::Asymptotic => {
            let gap = monitors::decay_gap(&traj, cfg.weight_a)?;
            out.summary.insert("decay_gap_final_over_mass".into(), gap.last().unwrap_or(0.0) / CLOSED_FORM.int_q2);
            out.series.push(gap);
            for &x0 in &cfg.x0_list {
                let r = monitors::eta_monotonicity(&traj.times, &states, x0, cfg.lambda, &w, cfg.mono_stride)?;
                out.summary.insert(format!("eta_mono_c_meas_x0_{x0}"), r.c_meas);
                out.reports.push_str(&r.to_jsonl());
            }
        }
        Experiment::MonotonicitySweep => {
            for &x0 in &cfg.x0_list {
                let right = monitors::monotonicity_right(&traj, x0, cfg.lambda, &w, cfg.mono_stride)?;
                let left = monitors::monotonicity_left(&traj, x0, cfg.lambda, &w, cfg.mono_stride)?;
                out.summary.insert(format!("right_worst_margin_x0_{x0}"), right.worst_margin);
                out.summary.insert(format!("right_c_meas_x0_{x0}"), right.c_meas);
                out.summary.insert(format!("left_worst_margin_x0_{x0}"), left.worst_margin);
                out.summary.insert(format!("left_c_meas_x0_{x0}"), left.c_meas);
                out.reports.push_str(&right.to_jsonl());
                out.reports.push_str(&left.to_jsonl());
            }
            for &shift in &cfg.kato_shifts {
                let k = monitors::kato_residual(&traj, &w.with_shift(shift))?;
                out.summary.insert(format!("kato_residual_max_shift_{shift}"), k.max());
                out.series.push(k);
            }
        }
        _ => {}
    }
    Ok(out)
}

fn multisoliton(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let grid = cfg.grid()?;
    let params = cfg.solitons()?;
    let mut out = RunOutput::default();
    let base = profiles::multisoliton_sum(&params, &grid, cfg.min_separation)?;
    let u0 = &base + &build_perturbation(cfg, &grid, &params[0])?;
    let traj = evolve(cfg, &u0, &mut out);
    invariant_series(&traj, &mut out);
    snapshot_fields(cfg, &traj, &mut out);

    let n = params.len();
    let mut cs: Vec<MonitorSeries> = (0..n).map(|j| MonitorSeries::new(format!("c_{j}"))).collect();
    let mut rhos: Vec<MonitorSeries> = (0..n).map(|j| MonitorSeries::new(format!("rho_{j}"))).collect();
    let mut loc = MonitorSeries::new("localized_distance_sum");
    let mut guesses = params.clone();
    let mut t_prev = 0.0;
    for i in 0..traj.len() {
        let t = traj.times[i];
        let u = lab_field(&traj, i);
        for g in guesses.iter_mut() {
            g.x0 += g.c * (t - t_prev);
        }
        t_prev = t;
        let states = match modulation::multisoliton_decompose(&u, &guesses, cfg.min_separation) {
            Ok(s) => s,
            Err(e) => {
                out.outcome = Some(format!("tube_exit at t = {t}: {e}"));
                out.summary.insert("decomposition_failed_at".into(), t);
                break;
            }
        };
        for (j, s) in states.iter().enumerate() {
            cs[j].push(t, s.c);
            rhos[j].push(t, s.rho);
            guesses[j] = SolitonParams { c: s.c, x0: s.rho };
        }
        let sum = profiles::multisoliton_sum(&guesses, &grid, 0.0)?;
        loc.push(t, monitors::localized_distance_to(&u, &sum, 0.1 * params[0].c * t));
    }
    let max_dev = cs
        .iter()
        .filter_map(|s| s.values.first().map(|c0| s.values.iter().map(|c| (c - c0).abs()).fold(0.0, f64::max)))
        .fold(0.0, f64::max);
    out.summary.insert("c_deviation_max".into(), max_dev);
    if n >= 2 {
        let speeds = |s: &MonitorSeries| -> Vec<f64> {
            (1..s.values.len().saturating_sub(1))
                .map(|i| (s.values[i + 1] - s.values[i - 1]) / (s.times[i + 1] - s.times[i - 1]))
                .collect()
        };
        let mut gap = f64::INFINITY;
        for j in 0..n - 1 {
            let (a, b) = (speeds(&rhos[j]), speeds(&rhos[j + 1]));
            for (x, y) in a.iter().zip(&b) {
                gap = gap.min(y - x);
            }
        }
        out.summary.insert("speed_gap_min".into(), gap);
    }
    let peak = loc.max();
    out.summary.insert("localized_peak".into(), peak);
    out.summary.insert("localized_final".into(), loc.last().unwrap_or(0.0));
    out.summary.insert("localized_ratio".into(), if peak > 0.0 { loc.last().unwrap_or(0.0) / peak } else { 0.0 });
    out.series.extend(cs);
    out.series.extend(rhos);
    out.series.push(loc);
    Ok(out)
}

fn spectrum(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let grid = Grid::new(cfg.spectrum_n, cfg.spectrum_length)?;
    let mut out = RunOutput::default();
    let m = linops::assemble(OperatorKind::L, &grid)?;
    let rep = linops::spectrum(&m, cfg.n_lowest)?;
    let q = profiles::profile_q(&grid);
    let qp = profiles::profile_q_prime(&grid);
    let f0 = profiles::profile_f0(&grid);
    let f1 = profiles::profile_f1(&grid);
    let s = profiles::profile_s(&grid);
    let named = [("f0", &f0), ("Qprime", &qp), ("f1", &f1)];
    let mut text = rep.to_text(&named);
    let mut ev = MonitorSeries::new("eigenvalue");
    for (i, l) in rep.eigenvalues.iter().enumerate() {
        ev.push(i as f64, *l);
        out.summary.insert(format!("eigenvalue_{i}"), *l);
    }
    out.series.push(ev);
    let cons = linops::constrained_rayleigh_min(&m, &[q.clone(), qp.clone()], Metric::L2)?;
    out.summary.insert("constrained_min_L_Q_Qprime".into(), cons.rayleigh_min);
    text.push('\n');
    text.push_str(&cons.to_text(&[("Q", &q), ("Qprime", &qp)]));
    drop(m);
    let mt = linops::assemble(OperatorKind::Ltilde, &grid)?;
    let dual = linops::constrained_rayleigh_min(&mt, &[s.clone()], Metric::HalfSobolev)?;
    out.summary.insert("constrained_min_Ltilde_S".into(), dual.rayleigh_min);
    text.push('\n');
    text.push_str(&dual.to_text(&[("S", &s)]));
    out.texts.push(("spectrum.txt".into(), text));
    Ok(out)
}

fn identity_suite(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let fine = Grid::new(cfg.identity_grid_n, cfg.identity_grid_length)?;
    let coarse = cfg.grid()?;
    for (prefix, grid) in [("fine", &fine), ("default", &coarse)] {
        for (name, v) in linops::identity_suite(grid) {
            let label = format!("{prefix}_{name}");
            let mut s = MonitorSeries::new(label.clone());
            s.push(0.0, v);
            out.summary.insert(label, v);
            out.series.push(s);
        }
        let q = profiles::profile_q(grid);
        let inv = evolution::invariants(&q);
        out.summary.insert(format!("{prefix}_int_q2_err"), (inv.mass - CLOSED_FORM.int_q2).abs());
        out.summary.insert(format!("{prefix}_energy_err"), (inv.energy - CLOSED_FORM.energy_q).abs());
    }
    Ok(out)
}
