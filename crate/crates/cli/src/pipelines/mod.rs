//! One pipeline per subcommand. Pipelines compute in memory and return an
//! [`Outcome`]; writing files is left to the caller.

mod atoms;
mod chaos;
mod cantor;
mod field;
mod laplace;
mod lq;
mod scaling;
mod spectrum;
mod tail;

use gmclab_core::analysis::stats::BootstrapSpec;
use gmclab_core::atomic::{
    build_atomic_direct, build_subordinated, sample_stable_atoms, AtomicMeasure, Construction, ZMin,
};
use gmclab_core::chaos::build_chaos;
use gmclab_core::field::FieldGrid;
use gmclab_core::kernels::{Family, KernelSpec};
use gmclab_core::rng::{Purpose, RngStream};
use gmclab_core::Result;

use crate::config::{Experiment, ExperimentConfig, ZMinMode};
use crate::output::{Check, Scatter, Table};
use crate::row;

/// Replicas `first..=last` draw from `master/replica/level/purpose`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedRange {
    pub master: u64,
    pub first: u64,
    pub last: u64,
    pub level: u32,
    pub purpose: Purpose,
    pub role: String,
}

#[derive(Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub plots: Vec<(String, Scatter)>,
    /// Extra files `(name, bytes)`.
    pub blobs: Vec<(String, Vec<u8>)>,
    pub seeds: Vec<SeedRange>,
}

impl Outcome {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn seeds(&mut self, master: u64, replicas: std::ops::Range<u64>, level: u32, purpose: Purpose, role: &str) {
        if replicas.is_empty() {
            return;
        }
        self.seeds.push(SeedRange {
            master,
            first: replicas.start,
            last: replicas.end - 1,
            level,
            purpose,
            role: role.into(),
        });
    }

    /// One row per seed range, with the path pattern of its replicas.
    pub fn seed_table(&self) -> Table {
        let mut t = Table::new("seeds", &["role", "replica_first", "replica_last", "level", "purpose", "path"]);
        for s in &self.seeds {
            let path = format!("{}/{{replica}}/{}/{}", s.master, s.level, s.purpose.name());
            t.push(row![s.role.as_str(), s.first, s.last, s.level, s.purpose.name(), path]);
        }
        t
    }
}

pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<Outcome> {
    let e = cfg.experiment.ok_or_else(|| gmclab_core::Error::InvalidParameter("experiment not set".into()))?;
    log::info!("running {e} with {} replicas", cfg.replicas);
    match e {
        Experiment::Field => field::run(cfg),
        Experiment::Chaos => chaos::run(cfg),
        Experiment::Atoms => atoms::run(cfg),
        Experiment::Spectrum => spectrum::run(cfg),
        Experiment::Laplace => laplace::run(cfg),
        Experiment::Tail => tail::run(cfg),
        Experiment::Scaling => scaling::run(cfg),
        Experiment::Kpz => cantor::run_kpz(cfg),
        Experiment::Duality => cantor::run_duality(cfg),
        Experiment::Lq => lq::run(cfg),
    }
}

pub(crate) fn kernel_spec(cfg: &ExperimentConfig) -> Result<KernelSpec> {
    let k = &cfg.kernel;
    match k.family {
        Family::ExactScale1D => KernelSpec::exact_1d(k.scale),
        Family::ExactScale2D => KernelSpec::exact_2d(k.scale),
        Family::StarScale => KernelSpec::star(cfg.dimension, k.scale, k.seed),
        Family::GffSquare => KernelSpec::gff_square()?.with_gff_t0(k.t0),
    }
}

pub(crate) fn alpha(cfg: &ExperimentConfig) -> Result<f64> {
    cfg.alpha().ok_or(gmclab_core::Error::AlphaRange(cfg.gamma2))
}

/// z_min for a box of intensity mass `volume`.
pub(crate) fn z_min(cfg: &ExperimentConfig, volume: f64, alpha: f64) -> Result<ZMin> {
    match cfg.z_min {
        ZMinMode::Explicit(z) => ZMin::new(z),
        ZMinMode::Auto { atoms } => ZMin::for_expected_count(volume, alpha, atoms),
    }
}

pub(crate) fn boot(cfg: &ExperimentConfig) -> BootstrapSpec {
    BootstrapSpec::new(cfg.bootstrap_resamples, cfg.bootstrap_seed)
}

/// Mean and standard error of a sample.
pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    use gmclab_core::analysis::stats::{mean, std_error};
    (mean(xs), std_error(xs))
}

/// Atomic measure over the field's lattice domain, built by `construction`
/// from streams `master/replica/level/{stable-atoms|subordination}`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn build_atomic(
    construction: Construction,
    field: &FieldGrid,
    gamma2: f64,
    alpha: f64,
    z: ZMin,
    master: u64,
    replica: u64,
    level: u32,
) -> Result<AtomicMeasure> {
    match construction {
        Construction::Direct => {
            let mut rng = RngStream::new(master, replica, level, Purpose::StableAtoms).rng();
            let atoms = sample_stable_atoms(&field.lattice().domain(), alpha, z, &mut rng)?;
            build_atomic_direct(field, gamma2, alpha, &atoms)
        }
        Construction::Subordinated => {
            let m = build_chaos(field, gamma2)?;
            let mut rng = RngStream::new(master, replica, level, Purpose::Subordination).rng();
            build_subordinated(&m, alpha, z, &mut rng)
        }
    }
}

pub(crate) fn atom_purpose(c: Construction) -> Purpose {
    match c {
        Construction::Direct => Purpose::StableAtoms,
        Construction::Subordinated => Purpose::Subordination,
    }
}
