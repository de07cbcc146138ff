//! Tail index of `Mbar([0,1]^d)` by a Hill plateau, with two synthetic
//! controls: an exact Pareto sample that must pass and an exponential sample
//! (no power-law tail) that must be flagged unstable.

use rand_distr::{Distribution, Exp1};

use gmclab_core::analysis::tail::{hill_plateau, HillPlateau};
use gmclab_core::field::FieldSampler;
use gmclab_core::kernels::LevelRange;
use gmclab_core::lattice::Lattice;
use gmclab_core::par::try_map_indexed;
use gmclab_core::rng::{Purpose, RngStream};
use gmclab_core::Result;

use super::{alpha, atom_purpose, build_atomic, kernel_spec, z_min, Outcome};
use crate::config::ExperimentConfig;
use crate::output::{Axis, Check, Scatter, Table};
use crate::row;

const PARETO_REPLICA: u64 = 1;
const EXPONENTIAL_REPLICA: u64 = 2;

/// `ln X` for `n` Pareto variables with `P(X > x) = x^{-alpha}`, `x >= 1`.
fn pareto_logs(n: usize, alpha: f64, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, PARETO_REPLICA, 0, Purpose::Synthetic).rng();
    (0..n).map(|_| Exp1.sample(&mut rng)).map(|e: f64| e / alpha).collect()
}

/// `ln X` for `n` unit exponential variables.
fn exponential_logs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, EXPONENTIAL_REPLICA, 0, Purpose::Synthetic).rng();
    (0..n).map(|_| Exp1.sample(&mut rng)).map(|x: f64| x.ln()).collect()
}

fn sweep_rows(t: &mut Table, sample: &str, h: &HillPlateau) {
    for &(k, a) in &h.sweep {
        t.push(row![sample, k, a]);
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = kernel_spec(cfg)?;
    let d = cfg.dimension;
    let a = alpha(cfg)?;
    let lattice = Lattice::unit(d, cfg.resolution)?;
    let sampler = FieldSampler::new(&spec, &lattice, LevelRange::upto(cfg.level)?, cfg.backend)?;
    let z = z_min(cfg, 1.0, a)?;
    let seed = cfg.master_seed;
    let n = cfg.level;
    let mut out = Outcome::default();
    out.seeds(seed, 0..cfg.replicas as u64, n, Purpose::Field, "field");
    out.seeds(seed, 0..cfg.replicas as u64, n, atom_purpose(cfg.construction), "atoms");
    out.seeds(seed, PARETO_REPLICA..EXPONENTIAL_REPLICA + 1, 0, Purpose::Synthetic, "controls");

    let ln_totals = try_map_indexed(cfg.replicas, |i| {
        let f = sampler.sample_field(seed, i as u64);
        build_atomic(cfg.construction, &f, cfg.gamma2, a, z, seed, i as u64, n).map(|m| m.ln_total_mass())
    })?;
    let measured = hill_plateau(&ln_totals)?;
    let pareto = hill_plateau(&pareto_logs(cfg.replicas, a, seed))?;
    let exponential = hill_plateau(&exponential_logs(cfg.replicas, seed))?;

    let mut hill = Table::new("hill", &["sample", "k", "alpha_hat"]);
    sweep_rows(&mut hill, "mbar", &measured);
    sweep_rows(&mut hill, "pareto", &pareto);
    sweep_rows(&mut hill, "exponential", &exponential);
    let mut summary = Table::new("tail_summary", &["sample", "alpha_hat", "drift", "stable", "target"]);
    summary.push(row!["mbar", measured.alpha, measured.drift, measured.stable, a]);
    summary.push(row!["pareto", pareto.alpha, pareto.drift, pareto.stable, a]);
    summary.push(row!["exponential", exponential.alpha, exponential.drift, exponential.stable, f64::NAN]);

    let tol = cfg.tolerance;
    out.checks.push(Check::flag(
        "tail_index",
        measured.alpha,
        a,
        format!("within {tol} and stable plateau"),
        (measured.alpha - a).abs() <= tol && measured.stable,
    ));
    out.checks.push(Check::flag(
        "pareto_control",
        pareto.alpha,
        a,
        format!("within {tol} and stable plateau"),
        (pareto.alpha - a).abs() <= tol && pareto.stable,
    ));
    out.checks.push(Check::flag(
        "exponential_control",
        exponential.drift,
        f64::NAN,
        "flagged unstable",
        !exponential.stable,
    ));

    let series = [("mbar", &measured), ("pareto", &pareto), ("exponential", &exponential)]
        .iter()
        .map(|(name, h)| (name.to_string(), h.sweep.iter().map(|&(k, v)| (k as f64, v)).collect()))
        .collect();
    out.plots.push((
        "hill".into(),
        Scatter {
            title: "Hill estimates over the order-statistic sweep".into(),
            x_label: "k".into(),
            y_label: "alpha_hat(k)".into(),
            y_axis: Axis::Linear,
            series,
        },
    ));
    out.tables.push(hill);
    out.tables.push(summary);
    Ok(out)
}
