//! Exact stochastic scaling of `Mbar` under the exact kernels.
//!
//! The base sample is `Mbar_{n0}([0,1]^d)`. For each `lambda` the field lives
//! on `[0, lambda]^d` with the same cell count at level `n0 / lambda`, and
//! `z_min` shrinks by `lambda^{d/alpha}`, so both sides carry the same
//! truncation after rescaling.

use gmclab_core::analysis::scaling::{omega_mgf_self_test, verify_perfect_scaling, ScalingInputs};
use gmclab_core::atomic::ZMin;
use gmclab_core::field::FieldSampler;
use gmclab_core::kernels::LevelRange;
use gmclab_core::lattice::Lattice;
use gmclab_core::par::try_map_indexed;
use gmclab_core::rng::Purpose;
use gmclab_core::{Error, Result};

use super::{alpha, atom_purpose, boot, build_atomic, kernel_spec, z_min, Outcome};
use crate::config::ExperimentConfig;
use crate::output::{Axis, Check, Scatter, Table};
use crate::row;

/// Largest accepted |z| of the Omega MGF self-test.
const MGF_Z: f64 = 3.0;

fn ln_masses(cfg: &ExperimentConfig, side: f64, level: u32, z: ZMin, a: f64) -> Result<Vec<f64>> {
    let spec = kernel_spec(cfg)?;
    let lattice = Lattice::new(cfg.dimension, cfg.resolution, [0.0, 0.0], side)?;
    let sampler = FieldSampler::new(&spec, &lattice, LevelRange::upto(level)?, cfg.backend)?;
    let seed = cfg.master_seed;
    try_map_indexed(cfg.replicas, |i| {
        let f = sampler.sample_field(seed, i as u64);
        build_atomic(cfg.construction, &f, cfg.gamma2, a, z, seed, i as u64, level).map(|m| m.ln_total_mass())
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let d = cfg.dimension;
    let a = alpha(cfg)?;
    let seed = cfg.master_seed;
    let z = z_min(cfg, 1.0, a)?;
    let reps = cfg.replicas as u64;
    let mut out = Outcome::default();

    out.seeds(seed, 0..reps, cfg.level, Purpose::Field, "field lambda=1");
    out.seeds(seed, 0..reps, cfg.level, atom_purpose(cfg.construction), "atoms lambda=1");
    let base = ln_masses(cfg, 1.0, cfg.level, z, a)?;
    let mut scaled = Vec::new();
    for &l in &cfg.lambda_grid {
        let level = cfg.level as f64 / l;
        if (level - level.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("level {} / lambda {l} is not an integer", cfg.level)));
        }
        let level = level.round() as u32;
        let zl = ZMin::from_ln(z.ln() + d as f64 / a * l.ln())?;
        out.seeds(seed, 0..reps, level, Purpose::Field, &format!("field lambda={l}"));
        out.seeds(seed, 0..reps, level, atom_purpose(cfg.construction), &format!("atoms lambda={l}"));
        scaled.push((l, ln_masses(cfg, l, level, zl, a)?));
    }
    let inputs = ScalingInputs { base: &base, scaled: scaled.iter().map(|(l, v)| (*l, v.as_slice())).collect() };
    let res = verify_perfect_scaling(&inputs, cfg.gamma2, a, d, &cfg.q_grid, cfg.ci_level, boot(cfg), seed)?;
    out.seeds(seed, 0..reps, 0, Purpose::Omega, "omega");

    let mut ratios = Table::new("scaling", &["lambda", "q", "ratio", "ci_lo", "ci_hi", "theory", "inside"]);
    let mut series = Vec::new();
    for r in &res.ratios {
        ratios.push(row![r.lambda, r.q, r.ratio, r.ci.0, r.ci.1, r.theory, r.theory_inside()]);
        out.checks.push(Check::flag(
            format!("ratio_lambda_{}_q_{}", r.lambda, r.q),
            r.ratio,
            r.theory,
            format!("theory inside {}% CI [{}, {}]", cfg.ci_level * 100.0, r.ci.0, r.ci.1),
            r.theory_inside(),
        ));
        series.push((r.lambda, r.ratio));
    }
    let mut slopes = Table::new("scaling_slopes", &["q", "slope", "theory"]);
    for &(q, s, t) in &res.slopes {
        slopes.push(row![q, s, t]);
    }
    let mut quantiles =
        Table::new("quantiles", &["lambda", "probability", "scaled", "predicted", "ks_statistic", "ks_p_value"]);
    for c in &res.quantiles {
        for (i, &p) in c.probabilities.iter().enumerate() {
            quantiles.push(row![c.lambda, p, c.scaled[i], c.predicted[i], c.ks.statistic, c.ks.p_value]);
        }
    }

    let mut mgf = Table::new("omega_mgf", &["lambda", "q", "empirical", "stderr", "theory", "z"]);
    for (li, &l) in cfg.lambda_grid.iter().enumerate() {
        for &q in &cfg.q_grid {
            let m = omega_mgf_self_test(cfg.gamma2, l, q, cfg.replicas, seed.wrapping_add(li as u64 + 1));
            let zs = m.z_score();
            mgf.push(row![l, q, m.empirical, m.stderr, m.theory, zs]);
            out.checks.push(Check::flag(
                format!("omega_mgf_lambda_{l}_q_{q}"),
                m.empirical,
                m.theory,
                format!("|z| <= {MGF_Z}"),
                zs.abs() <= MGF_Z,
            ));
        }
    }
    out.seeds(seed.wrapping_add(1), 0..reps, 0, Purpose::Omega, "omega self-test (master offset per lambda)");

    out.plots.push((
        "scaling".into(),
        Scatter {
            title: "Moment ratio against lambda".into(),
            x_label: "lambda".into(),
            y_label: "E[Mbar(lambda A)^q] / E[Mbar(A)^q]".into(),
            y_axis: Axis::Log10,
            series: vec![("empirical".into(), series)],
        },
    ));
    out.tables.push(ratios);
    out.tables.push(slopes);
    out.tables.push(quantiles);
    out.tables.push(mgf);
    Ok(out)
}
