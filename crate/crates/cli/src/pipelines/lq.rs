//! Box-counting `L^q` spectrum next to the chaos formula or the conjectured
//! atomic one. Only the normalisation points `tau(0) = -d` (chaos) and
//! `tau(1) = 0` are checked; the rest of the table is a comparison.

use gmclab_core::analysis::lq::{lq_spectrum, AtomsOn, BlockMeasure, LqTheory};
use gmclab_core::atomic::AtomicMeasure;
use gmclab_core::chaos::{build_chaos, LatticeMeasure};
use gmclab_core::field::FieldSampler;
use gmclab_core::kernels::LevelRange;
use gmclab_core::lattice::Lattice;
use gmclab_core::par::try_map_indexed;
use gmclab_core::rng::Purpose;
use gmclab_core::Result;

use super::{alpha, atom_purpose, build_atomic, kernel_spec, z_min, Outcome};
use crate::config::{ExperimentConfig, Measure};
use crate::output::{Axis, Check, Scatter, Table};
use crate::row;

enum Sampled {
    Chaos(Vec<LatticeMeasure>),
    Atomic(Vec<AtomicMeasure>),
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = kernel_spec(cfg)?;
    let d = cfg.dimension;
    let lattice = Lattice::unit(d, cfg.resolution)?;
    let sampler = FieldSampler::new(&spec, &lattice, LevelRange::upto(cfg.level)?, cfg.backend)?;
    let seed = cfg.master_seed;
    let n = cfg.level;
    let mut out = Outcome::default();
    out.seeds(seed, 0..cfg.replicas as u64, n, Purpose::Field, "field");

    let (sampled, theory) = match cfg.measure {
        Measure::Chaos => {
            let ms = try_map_indexed(cfg.replicas, |i| build_chaos(&sampler.sample_field(seed, i as u64), cfg.gamma2))?;
            (Sampled::Chaos(ms), LqTheory::Chaos { gamma2: cfg.gamma2, d })
        }
        Measure::Atomic => {
            let a = alpha(cfg)?;
            let z = z_min(cfg, 1.0, a)?;
            out.seeds(seed, 0..cfg.replicas as u64, n, atom_purpose(cfg.construction), "atoms");
            let ms = try_map_indexed(cfg.replicas, |i| {
                build_atomic(cfg.construction, &sampler.sample_field(seed, i as u64), cfg.gamma2, a, z, seed, i as u64, n)
            })?;
            (Sampled::Atomic(ms), LqTheory::Atomic { gamma2: cfg.gamma2, alpha: a, d })
        }
    };
    let domain = lattice.domain();
    let spectrum = match &sampled {
        Sampled::Chaos(ms) => {
            let refs: Vec<&dyn BlockMeasure> = ms.iter().map(|m| m as &dyn BlockMeasure).collect();
            lq_spectrum(&refs, &cfg.q_grid, &cfg.box_depths, theory)?
        }
        Sampled::Atomic(ms) => {
            let on: Vec<AtomsOn> = ms.iter().map(|m| AtomsOn { measure: m, domain: domain.clone() }).collect();
            let refs: Vec<&dyn BlockMeasure> = on.iter().map(|m| m as &dyn BlockMeasure).collect();
            lq_spectrum(&refs, &cfg.q_grid, &cfg.box_depths, theory)?
        }
    };

    let mut table = Table::new("lq", &["label", "q", "tau", "stderr", "conjecture"]);
    for r in &spectrum.rows {
        table.push(row![spectrum.label, r.q, r.tau, r.stderr, r.reference]);
        let anchor = match cfg.measure {
            Measure::Chaos if r.q == 0.0 => Some(-(d as f64)),
            _ if r.q == 1.0 => Some(0.0),
            _ => None,
        };
        if let Some(t) = anchor {
            out.checks.push(Check::within(format!("tau_q_{}", r.q), r.tau, t, cfg.tolerance));
        }
    }
    out.plots.push((
        "lq".into(),
        Scatter {
            title: "Box-counting L^q spectrum".into(),
            x_label: "q".into(),
            y_label: "tau(q)".into(),
            y_axis: Axis::Linear,
            series: vec![
                ("estimate".into(), spectrum.rows.iter().map(|r| (r.q, r.tau)).collect()),
                ("reference".into(), spectrum.rows.iter().map(|r| (r.q, r.reference)).collect()),
            ],
        },
    ));
    out.tables.push(table);
    Ok(out)
}
