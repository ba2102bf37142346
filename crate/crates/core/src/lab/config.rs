//! Flat key-value experiment configuration (TOML syntax, documented in
//! `docs/config.md`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BoError, Result};
use crate::evolution::{Scheme, StepperConfig};
use crate::profiles::SolitonParams;
use crate::spectral::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SolitonTranslate,
    Stability,
    Asymptotic,
    Multisoliton,
    Spectrum,
    MonotonicitySweep,
    IdentitySuite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    None,
    EvenBump,
    OddBump,
    RandomBandlimited,
}

/// Every tunable of the laboratory with its default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub grid_n: usize,
    pub grid_length: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    pub frame_speed: f64,
    pub perturbation_kind: PerturbationKind,
    pub amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub perturbation_width: f64,
    pub perturbation_center: f64,
    pub band_kmax: f64,
    pub orthogonalize: bool,
    pub mass_neutral: bool,
    pub horizon: f64,
    pub cadence: f64,
    pub soliton_speeds: Vec<f64>,
    pub soliton_centers: Vec<f64>,
    pub min_separation: f64,
    pub weight_a: f64,
    pub lambda: f64,
    pub x0_list: Vec<f64>,
    pub mono_stride: usize,
    pub kato_shifts: Vec<f64>,
    pub cplus_a: f64,
    pub cplus_tail: f64,
    pub spectrum_n: usize,
    pub spectrum_length: f64,
    pub n_lowest: usize,
    pub identity_grid_n: usize,
    pub identity_grid_length: f64,
    pub snapshot_stride: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::SolitonTranslate,
            grid_n: 4096,
            grid_length: 400.0,
            dt: 1e-3,
            scheme: Scheme::EtdRk4,
            dealias: true,
            frame_speed: 0.0,
            perturbation_kind: PerturbationKind::None,
            amplitude: 0.01,
            seed: None,
            perturbation_width: 3.0,
            perturbation_center: 0.0,
            band_kmax: 2.0,
            orthogonalize: true,
            mass_neutral: true,
            horizon: 10.0,
            cadence: 0.1,
            soliton_speeds: vec![1.0],
            soliton_centers: vec![0.0],
            min_separation: 50.0,
            weight_a: 20.0,
            lambda: 0.5,
            x0_list: vec![5.0, 10.0, 20.0],
            mono_stride: 10,
            kato_shifts: vec![0.0, 20.0],
            cplus_a: 2.0,
            cplus_tail: 1.0 / 3.0,
            spectrum_n: 2048,
            spectrum_length: 400.0,
            n_lowest: 8,
            identity_grid_n: 262144,
            identity_grid_length: 32768.0,
            snapshot_stride: 0,
        }
    }
}

/// `(key, description)` for every configuration key, in declaration order.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("experiment", "pipeline to run"),
    ("grid_n", "number of grid nodes (even, >= 16)"),
    ("grid_length", "period of the computational domain"),
    ("dt", "time step"),
    ("scheme", "time integrator: etd_rk4 or if_rk4"),
    ("dealias", "2/3-rule dealiasing of quadratic products"),
    ("frame_speed", "speed of the co-moving frame (0 = lab frame)"),
    ("perturbation_kind", "none, even_bump, odd_bump or random_bandlimited"),
    ("amplitude", "H^{1/2} norm of the perturbation"),
    ("seed", "random seed, required for random_bandlimited"),
    ("perturbation_width", "Gaussian envelope width of the perturbation (0 = no envelope)"),
    ("perturbation_center", "center of the perturbation envelope"),
    ("band_kmax", "largest wavenumber of random perturbations"),
    ("orthogonalize", "project the perturbation off Q_c and Q_c'"),
    ("mass_neutral", "rescale along Q_c so that the total mass equals the soliton mass"),
    ("horizon", "final time T"),
    ("cadence", "time between recorded samples (multiple of dt)"),
    ("soliton_speeds", "soliton speeds c_j"),
    ("soliton_centers", "initial soliton centers, increasing"),
    ("min_separation", "minimal gap between soliton centers"),
    ("weight_a", "scale A of the monotonicity weight"),
    ("lambda", "recession rate of the monotonicity weight, in (0, 1)"),
    ("x0_list", "weight offsets for monotonicity sweeps"),
    ("mono_stride", "sample stride for monotonicity pairs"),
    ("kato_shifts", "static weight positions for the Kato identity check"),
    ("cplus_a", "scale A of the weight used to estimate the asymptotic speed"),
    ("cplus_tail", "fraction of the time window used by the asymptotic-speed estimate"),
    ("spectrum_n", "grid nodes for dense eigensolves"),
    ("spectrum_length", "domain period for dense eigensolves"),
    ("n_lowest", "number of eigenpairs reported"),
    ("identity_grid_n", "grid nodes of the fine grid used by the identity suite"),
    ("identity_grid_length", "domain period of the identity-suite grid"),
    ("snapshot_stride", "write every k-th snapshot as a field file (0 = initial and final only)"),
];

impl ExperimentConfig {
    /// Default configuration for a given pipeline.
    pub fn for_experiment(experiment: Experiment) -> ExperimentConfig {
        let mut c = ExperimentConfig { experiment, ..Default::default() };
        match experiment {
            Experiment::Stability | Experiment::Asymptotic | Experiment::MonotonicitySweep => {
                c.grid_n = 8192;
                c.grid_length = 800.0;
                c.perturbation_kind = PerturbationKind::RandomBandlimited;
                c.seed = Some(7);
                c.horizon = 50.0;
            }
            Experiment::Multisoliton => {
                c.grid_n = 8192;
                c.grid_length = 800.0;
                c.perturbation_kind = PerturbationKind::RandomBandlimited;
                c.seed = Some(11);
                c.horizon = 40.0;
                c.soliton_speeds = vec![1.0, 2.0];
                c.soliton_centers = vec![0.0, 100.0];
            }
            _ => {}
        }
        c
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| BoError::Config(e.to_string()))?;
        apply_overrides(&mut table, overrides)?;
        let cfg: ExperimentConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| BoError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    /// Applies `key=value` overrides to an existing configuration.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml_str(&self.to_toml_string(), overrides)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_n, self.grid_length)
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig { dt: self.dt, scheme: self.scheme, dealias: self.dealias, frame_speed: self.frame_speed }
    }

    pub fn solitons(&self) -> Result<Vec<SolitonParams>> {
        self.soliton_speeds
            .iter()
            .zip(&self.soliton_centers)
            .map(|(&c, &x)| SolitonParams::new(c, x))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BoError::Config(m));
        self.grid()?;
        self.stepper().validate()?;
        if self.soliton_speeds.len() != self.soliton_centers.len() {
            return bad("soliton_speeds and soliton_centers differ in length".into());
        }
        if self.soliton_speeds.is_empty() {
            return bad("at least one soliton is required".into());
        }
        self.solitons()?;
        if self.perturbation_kind == PerturbationKind::RandomBandlimited && self.seed.is_none() {
            return bad("seed is required for random_bandlimited perturbations".into());
        }
        if !(self.amplitude >= 0.0) {
            return bad(format!("amplitude must be >= 0, got {}", self.amplitude));
        }
        if !(self.horizon >= 0.0) || !(self.cadence > 0.0) {
            return bad("horizon must be >= 0 and cadence > 0".into());
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad(format!("lambda must lie in (0, 1), got {}", self.lambda));
        }
        if !(self.weight_a > 1.0 && self.cplus_a > 1.0) {
            return bad("weight scales must exceed 1".into());
        }
        if !(self.cplus_tail > 0.0 && self.cplus_tail <= 1.0) {
            return bad("cplus_tail must lie in (0, 1]".into());
        }
        if self.mono_stride == 0 || self.n_lowest == 0 {
            return bad("mono_stride and n_lowest must be positive".into());
        }
        Grid::new(self.spectrum_n, self.spectrum_length)?;
        Grid::new(self.identity_grid_n, self.identity_grid_length)?;
        Ok(())
    }
}

fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| BoError::Config(format!("override `{o}` is not of the form key=value")))?;
        let key = key.trim();
        if !CONFIG_KEYS.iter().any(|(k, _)| *k == key) {
            return Err(BoError::Config(format!("unknown key `{key}`")));
        }
        let value = value.trim();
        let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        table.insert(key.to_string(), parsed);
    }
    Ok(())
}
