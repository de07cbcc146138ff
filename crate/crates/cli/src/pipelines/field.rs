//! Field sampling with a covariance fidelity check at random site pairs.

use std::io::Cursor;

use rand::Rng;

use gmclab_core::field::ensemble::{EnsembleHeader, EnsembleWriter};
use gmclab_core::field::FieldSampler;
use gmclab_core::kernels::LevelRange;
use gmclab_core::lattice::Lattice;
use gmclab_core::par::map_indexed;
use gmclab_core::rng::{Purpose, RngStream};
use gmclab_core::Result;

use super::{kernel_spec, mean_se, Outcome};
use crate::config::ExperimentConfig;
use crate::output::{Check, Table};
use crate::row;

/// Fraction of site pairs that must fall within 3 standard errors.
pub const FIDELITY_FRACTION: f64 = 0.95;

/// Site pairs at separations spread geometrically from 0 to a quarter of the
/// domain, first pair on the diagonal.
fn site_pairs(lattice: &Lattice, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let n = lattice.resolution();
    let d = lattice.dim();
    let mut rng = RngStream::new(seed, 0, 0, Purpose::Synthetic).rng();
    (0..count)
        .map(|p| {
            let i: [usize; 2] = std::array::from_fn(|k| if k < d { rng.random_range(0..n) } else { 0 });
            let max = (n / 4).max(1) as f64;
            let off = if p == 0 { 0.0 } else { max.powf(p as f64 / (count.max(2) - 1) as f64) };
            let mut j = i;
            let axis = if d == 2 { p % 2 } else { 0 };
            j[axis] = (i[axis] + off.round() as usize) % n;
            if d == 2 && p % 3 == 2 {
                j[1 - axis] = (i[1 - axis] + (off / 2.0).round() as usize) % n;
            }
            (lattice.index(i), lattice.index(j))
        })
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = kernel_spec(cfg)?;
    let lattice = Lattice::unit(cfg.dimension, cfg.resolution)?;
    let levels = LevelRange::upto(cfg.level)?;
    let sampler = FieldSampler::new(&spec, &lattice, levels, cfg.backend)?;
    let pairs = site_pairs(&lattice, cfg.field_pairs, cfg.master_seed);
    let seed = cfg.master_seed;
    let mut out = Outcome::default();
    out.seeds(seed, 0..cfg.replicas as u64, cfg.level, Purpose::Field, "field");
    out.seeds(seed, 0..1, 0, Purpose::Synthetic, "site pairs");

    let per_rep = map_indexed(cfg.replicas, |r| {
        let f = sampler.sample_field(seed, r as u64);
        let v = f.values();
        let prods: Vec<f64> = pairs.iter().map(|&(i, j)| v[i] * v[j]).collect();
        let n = v.len() as f64;
        let mean = gmclab_core::par::tree_sum(v) / n;
        let sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = gmclab_core::par::tree_sum(&sq) / n;
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dump = if cfg.field_dump { Some(v.to_vec()) } else { None };
        (prods, [mean, var, min, max], dump)
    });

    let mut summary = Table::new("field_summary", &["replica", "mean", "variance", "min", "max"]);
    for (r, (_, s, _)) in per_rep.iter().enumerate() {
        summary.push(row![r, s[0], s[1], s[2], s[3]]);
    }

    let mut cov = Table::new(
        "covariance",
        &["pair", "site_i", "site_j", "distance", "empirical", "stderr", "theory", "z", "pass"],
    );
    let mut inside = 0;
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let xs: Vec<f64> = per_rep.iter().map(|r| r.0[p]).collect();
        let (emp, se) = mean_se(&xs);
        let (a, b) = (lattice.site_center(i), lattice.site_center(j));
        let theory = spec.eval_range(levels, &a, &b)?;
        let dist = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let z = (emp - theory) / se;
        let ok = z.abs() <= 3.0;
        inside += ok as usize;
        cov.push(row![p, i, j, dist, emp, se, theory, z, ok]);
    }
    let frac = inside as f64 / pairs.len().max(1) as f64;
    out.checks.push(Check::flag(
        "covariance_fidelity",
        frac,
        1.0,
        format!("fraction of pairs within 3 SE >= {FIDELITY_FRACTION}"),
        frac >= FIDELITY_FRACTION,
    ));
    out.checks.push(Check::flag(
        "embedding_clip",
        sampler.clipped_fraction(),
        0.0,
        "<= 1e-6",
        sampler.clipped_fraction() <= gmclab_core::field::CLIP_TOLERANCE,
    ));

    if cfg.field_dump {
        let header = EnsembleHeader {
            d: cfg.dimension as u32,
            resolution: cfg.resolution as u32,
            level: cfg.level,
            family: cfg.kernel.family,
            seed,
        };
        let mut w = EnsembleWriter::new(Cursor::new(Vec::new()), header)?;
        for (_, _, v) in &per_rep {
            w.push(v.as_deref().expect("dump requested"))?;
        }
        out.blobs.push(("ensemble.gmcf".into(), w.finish()?.into_inner()));
    }
    out.tables.push(cov);
    out.tables.push(summary);
    Ok(out)
}
