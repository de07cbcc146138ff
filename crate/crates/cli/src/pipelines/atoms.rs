//! Atom tables of `Mbar` for plotting, with the qualitative checks: weights
//! spread over many orders of magnitude, a few atoms carrying most of the
//! mass, and atom weight tracking the field more closely as `gamma^2` grows.
//!
//! The `gamma^2` sweep uses common random numbers: the same field and atom
//! streams at every `gamma^2`, with `z_min` set for a fixed expected count so
//! the Poisson count and uniforms coincide across the sweep.

use gmclab_core::analysis::stats::{mean, spearman};
use gmclab_core::atomic::{alpha_from_gamma, log_sum_exp, AtomicMeasure};
use gmclab_core::field::{FieldGrid, FieldSampler};
use gmclab_core::kernels::LevelRange;
use gmclab_core::lattice::Lattice;
use gmclab_core::par::try_map_indexed;
use gmclab_core::rng::Purpose;
use gmclab_core::{Error, Result};

use super::{atom_purpose, build_atomic, kernel_spec, z_min, Outcome};
use crate::config::{AlphaMode, ExperimentConfig};
use crate::output::{Axis, Check, Scatter, Table};
use crate::row;

/// Required span `log10(max / min)` of atom masses.
pub const SPAN_DECADES: f64 = 4.0;
/// The `DOMINANT` heaviest atoms must carry at least `DOMINANT_SHARE` of the mass.
pub const DOMINANT: usize = 10;
pub const DOMINANT_SHARE: f64 = 0.5;

fn alpha_at(cfg: &ExperimentConfig, gamma2: f64) -> Result<f64> {
    match cfg.alpha {
        AlphaMode::Duality => alpha_from_gamma(gamma2, cfg.dimension),
        AlphaMode::Explicit(a) => Ok(a),
    }
}

struct Stats {
    span: f64,
    top_share: f64,
    rho: f64,
}

fn stats(m: &AtomicMeasure, field: &FieldGrid) -> Result<Stats> {
    let lm = m.ln_masses();
    if lm.len() <= DOMINANT {
        return Err(Error::Empty(format!("only {} atoms; lower z_min", lm.len())));
    }
    let mut sorted = lm.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let span = (sorted[0] - sorted[sorted.len() - 1]) / std::f64::consts::LN_10;
    let top_share = (log_sum_exp(&sorted[..DOMINANT]) - log_sum_exp(&sorted)).exp();
    let lattice = field.lattice();
    let x: Vec<f64> = m
        .positions()
        .iter()
        .map(|p| lattice.cell_of(p).map(|c| field.values()[c]).ok_or(Error::InvalidParameter("atom outside lattice".into())))
        .collect::<Result<_>>()?;
    Ok(Stats { span, top_share, rho: spearman(lm, &x)? })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = kernel_spec(cfg)?;
    let lattice = Lattice::unit(cfg.dimension, cfg.resolution)?;
    let sampler = FieldSampler::new(&spec, &lattice, LevelRange::upto(cfg.level)?, cfg.backend)?;
    let seed = cfg.master_seed;
    let n = cfg.level;
    let mut out = Outcome::default();
    out.seeds(seed, 0..cfg.replicas as u64, n, Purpose::Field, "field");
    out.seeds(seed, 0..cfg.replicas as u64, n, atom_purpose(cfg.construction), "atoms");

    let mut grid = vec![cfg.gamma2];
    grid.extend(cfg.gamma2_sweep.iter().copied().filter(|&g| g != cfg.gamma2));
    let alphas = grid.iter().map(|&g| alpha_at(cfg, g)).collect::<Result<Vec<_>>>()?;
    let zs = alphas.iter().map(|&a| z_min(cfg, 1.0, a)).collect::<Result<Vec<_>>>()?;
    let dumped = cfg.dump_replicas.min(cfg.replicas);

    // Per replica: stats for every gamma^2, and the atoms of the main run when dumped.
    let per_rep = try_map_indexed(cfg.replicas, |r| {
        let f = sampler.sample_field(seed, r as u64);
        let mut st = Vec::with_capacity(grid.len());
        let mut keep = None;
        for (gi, &g) in grid.iter().enumerate() {
            let m = build_atomic(cfg.construction, &f, g, alphas[gi], zs[gi], seed, r as u64, n)?;
            st.push(stats(&m, &f)?);
            if gi == 0 && r < dumped {
                keep = Some(m);
            }
        }
        Ok::<_, Error>((st, keep))
    })?;

    let mut atoms = Table::new("atoms", &["replica", "x", "y", "z", "mass", "ln_mass"]);
    let mut rank_plot = Vec::new();
    for (r, (_, keep)) in per_rep.iter().enumerate() {
        let Some(m) = keep else { continue };
        let mut order: Vec<usize> = (0..m.len()).collect();
        order.sort_by(|&a, &b| m.ln_masses()[b].total_cmp(&m.ln_masses()[a]));
        for &i in &order {
            let p = m.positions()[i];
            let y = if cfg.dimension == 2 { p[1] } else { f64::NAN };
            let lm = m.ln_masses()[i];
            atoms.push(row![r, p[0], y, m.ln_sizes()[i].exp(), lm.exp(), lm]);
        }
        if r == 0 {
            rank_plot = order.iter().enumerate().map(|(k, &i)| ((k + 1) as f64, m.ln_masses()[i].exp())).collect();
        }
    }

    let mut sweep = Table::new("atom_stats", &["gamma2", "alpha", "ln_z_min", "span_decades", "top_share", "spearman"]);
    let mut rhos = Vec::with_capacity(grid.len());
    for (gi, &g) in grid.iter().enumerate() {
        let col: Vec<&Stats> = per_rep.iter().map(|(s, _)| &s[gi]).collect();
        let span = col.iter().map(|s| s.span).fold(f64::INFINITY, f64::min);
        let share = mean(&col.iter().map(|s| s.top_share).collect::<Vec<_>>());
        let rho = mean(&col.iter().map(|s| s.rho).collect::<Vec<_>>());
        sweep.push(row![g, alphas[gi], zs[gi].ln(), span, share, rho]);
        if gi == 0 {
            out.checks.push(Check::flag(
                "mass_span",
                span,
                SPAN_DECADES,
                format!("smallest per-replica span >= {SPAN_DECADES} decades"),
                span >= SPAN_DECADES,
            ));
            out.checks.push(Check::flag(
                "dominant_atoms",
                share,
                DOMINANT_SHARE,
                format!("mean share of top {DOMINANT} atoms >= {DOMINANT_SHARE}"),
                share >= DOMINANT_SHARE,
            ));
        }
        rhos.push((g, rho));
    }
    let mut by_gamma = rhos.clone();
    by_gamma.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sweep_only: Vec<(f64, f64)> = by_gamma.iter().copied().filter(|(g, _)| cfg.gamma2_sweep.contains(g)).collect();
    let monotone = sweep_only.windows(2).all(|w| w[1].1 > w[0].1);
    out.checks.push(Check::flag(
        "spearman_monotone",
        sweep_only.last().map(|s| s.1).unwrap_or(f64::NAN),
        f64::NAN,
        format!("spearman increasing over gamma2 {:?}", cfg.gamma2_sweep),
        monotone,
    ));

    out.plots.push((
        "atom_masses".into(),
        Scatter {
            title: "Atom masses by rank, replica 0".into(),
            x_label: "rank".into(),
            y_label: "mass".into(),
            y_axis: Axis::Log10,
            series: vec![("mass".into(), rank_plot)],
        },
    ));
    out.plots.push((
        "spearman".into(),
        Scatter {
            title: "Atom weight against field at the atom".into(),
            x_label: "gamma^2".into(),
            y_label: "Spearman rank correlation".into(),
            y_axis: Axis::Linear,
            series: vec![("mean over replicas".into(), by_gamma)],
        },
    ));
    out.tables.push(atoms);
    out.tables.push(sweep);
    Ok(out)
}

