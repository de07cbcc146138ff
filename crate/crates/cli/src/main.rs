use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gmclab::config::{Experiment, ExperimentConfig, RawConfig};
use gmclab::run::run_experiment;

#[derive(Parser)]
#[command(name = "gmclab", version, about = "Lattice chaos and atomic dual chaos experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Field samples and covariance fidelity.
    Field(Flags),
    /// Total and box masses of the lattice chaos.
    Chaos(Flags),
    /// Atom tables of the atomic chaos.
    Atoms(Flags),
    /// Power-law spectrum of box masses.
    Spectrum(Flags),
    /// Laplace transform and moment relations.
    Laplace(Flags),
    /// Tail index of the atomic total mass.
    Tail(Flags),
    /// Exact stochastic scaling.
    Scaling(Flags),
    /// Cantor set dimension under the chaos.
    Kpz(Flags),
    /// Cantor set dimension under the atomic chaos.
    Duality(Flags),
    /// L^q spectrum comparison.
    Lq(Flags),
}

#[derive(Args)]
struct Flags {
    /// key = value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `replicas`.
    #[arg(long)]
    replicas: Option<usize>,
}

impl Command {
    fn split(self) -> (Experiment, Flags) {
        match self {
            Command::Field(f) => (Experiment::Field, f),
            Command::Chaos(f) => (Experiment::Chaos, f),
            Command::Atoms(f) => (Experiment::Atoms, f),
            Command::Spectrum(f) => (Experiment::Spectrum, f),
            Command::Laplace(f) => (Experiment::Laplace, f),
            Command::Tail(f) => (Experiment::Tail, f),
            Command::Scaling(f) => (Experiment::Scaling, f),
            Command::Kpz(f) => (Experiment::Kpz, f),
            Command::Duality(f) => (Experiment::Duality, f),
            Command::Lq(f) => (Experiment::Lq, f),
        }
    }
}

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn load(experiment: Experiment, flags: &Flags) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(&flags.config).map_err(|e| format!("{}: {e}", flags.config.display()))?;
    let diag = |d: Vec<gmclab::config::Diagnostic>| d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n");
    let mut raw = RawConfig::parse(&text).map_err(diag)?;
    if let Some(s) = flags.seed {
        raw.set("master_seed", s.to_string());
    }
    if let Some(o) = &flags.out {
        raw.set("output.dir", o.to_string_lossy());
    }
    if let Some(r) = flags.replicas {
        raw.set("replicas", r.to_string());
    }
    ExperimentConfig::build(Some(experiment), &raw).map_err(diag)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let (experiment, flags) = cli.command.split();
    let cfg = match load(experiment, &flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("gmclab: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run_experiment(&cfg) {
        Ok((manifest, outcome)) => {
            for c in &outcome.checks {
                println!("{} {} observed={} expected={} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.observed, c.expected, c.tolerance);
            }
            println!("wrote {} files to {}", manifest.files.len() + 1, cfg.output_dir.display());
            if manifest.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED_CHECK)
            }
        }
        // Core errors here are preconditions the validator could not see.
        Err(e) => {
            eprintln!("gmclab: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
