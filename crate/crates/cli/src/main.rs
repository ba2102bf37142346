//! Command-line front end for the experiment pipelines.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bolab::lab::{run_experiment, Experiment, ExperimentConfig, RunManifest};

#[derive(Parser)]
#[command(name = "bolab", version, about = "Benjamin-Ono soliton laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config (default: soliton translation).
    Simulate(RunArgs),
    /// Spectrum of the linearized operator and constrained minima.
    Spectrum(RunArgs),
    /// Monotonicity sweep over x0 plus Kato residuals.
    Monotonicity(RunArgs),
    /// Perturbed soliton with modulation, tube distance and c+.
    Stability(RunArgs),
    /// Well-separated multi-soliton decomposition.
    Multisoliton(RunArgs),
    /// Algebraic identities and closed-form integrals.
    Identities(RunArgs),
    /// Print the summary of a finished run directory.
    Report {
        /// Run directory containing manifest.json.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "runs/latest")]
    out: PathBuf,
    /// RNG seed for random perturbations.
    #[arg(long)]
    seed: Option<u64>,
    /// `key=value` override, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(args: &RunArgs, preset: Option<Experiment>) -> bolab::Result<ExperimentConfig> {
    let mut overrides = args.overrides.clone();
    if let Some(s) = args.seed {
        overrides.push(format!("seed={s}"));
    }
    let base = match (&args.config, preset) {
        (Some(path), _) => ExperimentConfig::load(path, &[])?,
        (None, Some(e)) => ExperimentConfig::for_experiment(e),
        (None, None) => ExperimentConfig::default(),
    };
    let mut cfg = base.with_overrides(&overrides)?;
    if let Some(e) = preset {
        cfg.experiment = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_manifest(m: &RunManifest) {
    println!("experiment: {}", m.experiment);
    println!("outcome: {}", m.outcome);
    for (k, v) in &m.summary {
        println!("{k} = {v:.6e}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, preset) = match &cli.command {
        Command::Report { dir } => {
            return match RunManifest::read(dir) {
                Ok(m) => {
                    print_manifest(&m);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            };
        }
        Command::Simulate(a) => (a, None),
        Command::Spectrum(a) => (a, Some(Experiment::Spectrum)),
        Command::Monotonicity(a) => (a, Some(Experiment::MonotonicitySweep)),
        Command::Stability(a) => (a, Some(Experiment::Stability)),
        Command::Multisoliton(a) => (a, Some(Experiment::Multisoliton)),
        Command::Identities(a) => (a, Some(Experiment::IdentitySuite)),
    };
    let result = load(args, preset).and_then(|cfg| run_experiment(&cfg, &args.out));
    match result {
        Ok(m) => {
            print_manifest(&m);
            println!("wrote {}", args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
