use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::config::{validate_config, Diagnostic, ExperimentConfig};
use crate::manifest::{file_entry, RunManifest};
use crate::output::Summary;
use crate::pipelines::{run_pipeline, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<Diagnostic>),
    #[error("experiment key missing")]
    NoExperiment,
    #[error(transparent)]
    Core(#[from] gmclab_core::Error),
    #[error("writing results: {0}")]
    Io(#[from] std::io::Error),
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SEEDS_FILE: &str = "seeds.csv";
pub const CONFIG_FILE: &str = "config.txt";

fn write(dir: &Path, name: &str, bytes: &[u8], names: &mut Vec<String>) -> std::io::Result<()> {
    fs::write(dir.join(name), bytes)?;
    names.push(name.to_string());
    Ok(())
}

/// Writes tables, plots, summary and seeds of `outcome` into `dir`; returns
/// the written file names in order.
pub fn write_outcome(cfg: &ExperimentConfig, outcome: &Outcome, dir: &Path) -> Result<Vec<String>, RunError> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    write(dir, CONFIG_FILE, cfg.to_text().as_bytes(), &mut names)?;
    for t in &outcome.tables {
        write(dir, &format!("{}.csv", t.name), &t.to_csv(), &mut names)?;
    }
    if cfg.plot {
        for (name, plot) in &outcome.plots {
            write(dir, &format!("{name}.svg"), plot.render().as_bytes(), &mut names)?;
        }
    }
    for (name, bytes) in &outcome.blobs {
        write(dir, name, bytes, &mut names)?;
    }
    write(dir, SEEDS_FILE, &outcome.seed_table().to_csv(), &mut names)?;
    let experiment = cfg.experiment.map(|e| e.tag()).unwrap_or("");
    let summary = Summary::new(experiment, outcome.checks.clone());
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write(dir, SUMMARY_FILE, json.as_bytes(), &mut names)?;
    Ok(names)
}

/// Validates, runs and writes one experiment. The manifest is written last
/// and lists every other file with its digest.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(RunManifest, Outcome), RunError> {
    let experiment = cfg.experiment.ok_or(RunError::NoExperiment)?;
    let diags = validate_config(cfg);
    if !diags.is_empty() {
        return Err(RunError::Config(diags));
    }
    let start = Instant::now();
    let outcome = run_pipeline(cfg)?;
    let dir = &cfg.output_dir;
    let names = write_outcome(cfg, &outcome, dir)?;
    let files = names.iter().map(|n| file_entry(dir, n)).collect::<Result<_, _>>()?;
    let manifest = RunManifest {
        experiment: experiment.tag().into(),
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.to_pairs().into_iter().collect(),
        seed_scheme: "ChaCha8 keyed by master_seed; stream master_seed/replica/level/purpose".into(),
        seeds_file: SEEDS_FILE.into(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        workers: gmclab_core::par::init_workers_from_env(),
        pass: outcome.checks.iter().all(|c| c.pass),
        files,
    };
    fs::write(dir.join(MANIFEST_FILE), manifest.to_json())?;
    Ok((manifest, outcome))
}
