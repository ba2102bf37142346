use std::collections::BTreeSet;

use bolab::lab::fieldio::{field_from_bytes, field_to_bytes, HEADER_LEN};
use bolab::lab::manifest::RunManifest;
use bolab::lab::metrics::{metrics_csv, metrics_jsonl};
use bolab::lab::{
    deserialize_field, run_experiment, serialize_field, Experiment, ExperimentConfig, PerturbationKind, CONFIG_KEYS,
};
use bolab::monitors::MonitorSeries;
use bolab::{BoError, Field, Grid};

fn short_run() -> ExperimentConfig {
    ExperimentConfig {
        grid_n: 1024,
        grid_length: 200.0,
        horizon: 0.3,
        cadence: 0.1,
        dt: 1e-2,
        ..ExperimentConfig::default()
    }
}

#[test]
fn config_round_trip_is_exact() {
    for e in [Experiment::SolitonTranslate, Experiment::Stability, Experiment::Multisoliton] {
        let mut cfg = ExperimentConfig::for_experiment(e);
        cfg.dt = 0.1 + 0.2;
        cfg.amplitude = 1.0 / 3.0;
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string(), &[]).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.dt.to_bits(), cfg.dt.to_bits());
    }
}

#[test]
fn unknown_keys_and_bad_values_rejected() {
    assert!(matches!(ExperimentConfig::from_toml_str("grid_nn = 4", &[]), Err(BoError::Config(_))));
    assert!(ExperimentConfig::from_toml_str("", &["nope=1".into()]).is_err());
    assert!(ExperimentConfig::from_toml_str("", &["grid_n".into()]).is_err());
    assert!(ExperimentConfig::from_toml_str("lambda = 1.5", &[]).is_err());
    assert!(ExperimentConfig::from_toml_str("soliton_centers = [0.0, 1.0]", &[]).is_err());
}

#[test]
fn overrides_apply_after_file() {
    let cfg = ExperimentConfig::from_toml_str(
        "grid_n = 2048\nhorizon = 3.0\n",
        &["horizon=5.5".into(), "soliton_speeds=[1.0, 2.0]".into(), "soliton_centers=[0.0, 80.0]".into(),
          "scheme=if_rk4".into()],
    )
    .unwrap();
    assert_eq!(cfg.grid_n, 2048);
    assert_eq!(cfg.horizon, 5.5);
    assert_eq!(cfg.soliton_speeds, vec![1.0, 2.0]);
    assert_eq!(cfg.scheme, bolab::evolution::Scheme::IfRk4);
    let again = cfg.with_overrides(&["dealias=false".into()]).unwrap();
    assert!(!again.dealias && again.grid_n == 2048);
}

#[test]
fn random_perturbation_needs_seed() {
    let mut cfg = ExperimentConfig { perturbation_kind: PerturbationKind::RandomBandlimited, ..Default::default() };
    assert!(matches!(cfg.validate(), Err(BoError::Config(_))));
    cfg.seed = Some(3);
    assert!(cfg.validate().is_ok());
}

#[test]
fn config_keys_registry_matches_struct_and_docs() {
    let serialized: toml::Table =
        toml::from_str(&ExperimentConfig { seed: Some(1), ..Default::default() }.to_toml_string()).unwrap();
    let fields: BTreeSet<&str> = serialized.keys().map(|k| k.as_str()).collect();
    let registry: BTreeSet<&str> = CONFIG_KEYS.iter().map(|(k, _)| *k).collect();
    assert_eq!(fields, registry);
    assert_eq!(registry.len(), CONFIG_KEYS.len());
    let doc = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/config.md")).unwrap();
    for k in &registry {
        assert!(doc.contains(&format!("| `{k}` |")), "docs/config.md misses `{k}`");
    }
}

#[test]
fn field_files_round_trip_bit_exactly() {
    let g = Grid::new(64, 12.345678901234567).unwrap();
    let f = Field::from_fn(&g, |x| (x * 1.1).sin() / 3.0 + 1e-300);
    let bytes = field_to_bytes(&f).unwrap();
    assert_eq!(bytes.len(), HEADER_LEN + 8 * 64);
    assert_eq!(&bytes[..4], b"BOF1");
    assert_eq!(bytes[HEADER_LEN - 1], b'\n');
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.bof");
    serialize_field(&f, &path).unwrap();
    let back = deserialize_field(&path).unwrap();
    assert_eq!(back.grid().length().to_bits(), g.length().to_bits());
    assert!(back.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(field_from_bytes(&bytes[..bytes.len() - 1], &path).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(field_from_bytes(&bad, &path), Err(BoError::FieldFormat { .. })));
}

#[test]
fn metric_formats() {
    let mut s = MonitorSeries::new("mass");
    s.push(0.0, 1.5);
    s.push(0.1, 2.0 / 3.0);
    let jsonl = metrics_jsonl(std::slice::from_ref(&s)).unwrap();
    let lines: Vec<serde_json::Value> = jsonl.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["label"], "mass");
    assert_eq!(lines[1]["value"].as_f64().unwrap(), 2.0 / 3.0);
    let csv = metrics_csv(&[s]);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "t,label,value");
    let last: Vec<&str> = rows[2].split(',').collect();
    assert_eq!(last[1], "mass");
    assert_eq!(last[2].parse::<f64>().unwrap(), 2.0 / 3.0);
}

#[test]
fn runs_write_verified_manifest_and_are_deterministic() {
    let cfg = ExperimentConfig { perturbation_kind: PerturbationKind::RandomBandlimited, seed: Some(5), ..short_run() };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m1 = run_experiment(&cfg, d1.path()).unwrap();
    let m2 = run_experiment(&cfg, d2.path()).unwrap();
    assert_eq!(m1.outcome, "completed");
    let read = RunManifest::read(d1.path()).unwrap();
    assert_eq!(read, m1);
    for entry in &m1.files {
        let bytes = std::fs::read(d1.path().join(&entry.path)).unwrap();
        assert_eq!(bytes.len() as u64, entry.bytes);
        assert_eq!(entry.sha256, bolab::lab::manifest::file_entry(d1.path(), &entry.path).unwrap().sha256);
    }
    assert!(m1.files.iter().any(|e| e.path == "metrics.jsonl"));
    assert!(m1.files.iter().any(|e| e.path.starts_with("fields/")));
    let hashes = |m: &RunManifest| m.files.iter().map(|e| (e.path.clone(), e.sha256.clone())).collect::<Vec<_>>();
    assert_eq!(hashes(&m1), hashes(&m2));
    assert_eq!(m1.summary, m2.summary);
    let echoed = ExperimentConfig::from_toml_str(&m1.config, &[]).unwrap();
    assert_eq!(echoed, cfg);
    let other = run_experiment(&ExperimentConfig { seed: Some(6), ..cfg.clone() }, tempfile::tempdir().unwrap().path())
        .unwrap();
    assert_ne!(hashes(&other), hashes(&m1));
}
