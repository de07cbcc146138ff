//! Lattice chaos replicas: total and corner-box masses.

use gmclab_core::chaos::{build_chaos, corner_box_masses};
use gmclab_core::field::FieldSampler;
use gmclab_core::kernels::LevelRange;
use gmclab_core::lattice::Lattice;
use gmclab_core::par::try_map_indexed;
use gmclab_core::rng::Purpose;
use gmclab_core::{Error, Result};

use super::{kernel_spec, mean_se, Outcome};
use crate::config::ExperimentConfig;
use crate::output::{Axis, Check, Scatter, Table};
use crate::row;

/// Cell counts per side of the boxes `[0, lambda)^d`.
pub(crate) fn box_widths(lattice: &Lattice, lambdas: &[f64]) -> Result<Vec<usize>> {
    let n = lattice.resolution() as f64;
    lambdas
        .iter()
        .map(|&l| {
            let w = l * n;
            if (w - w.round()).abs() > 1e-9 || w.round() < 1.0 {
                Err(Error::InvalidParameter(format!("lambda = {l} is not a whole number of cells at resolution {n}")))
            } else {
                Ok(w.round() as usize)
            }
        })
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = kernel_spec(cfg)?;
    let lattice = Lattice::unit(cfg.dimension, cfg.resolution)?;
    let sampler = FieldSampler::new(&spec, &lattice, LevelRange::upto(cfg.level)?, cfg.backend)?;
    let widths = box_widths(&lattice, &cfg.lambda_grid)?;
    let seed = cfg.master_seed;
    let mut out = Outcome::default();
    out.seeds(seed, 0..cfg.replicas as u64, cfg.level, Purpose::Field, "field");

    let rows = try_map_indexed(cfg.replicas, |r| {
        let m = build_chaos(&sampler.sample_field(seed, r as u64), cfg.gamma2)?;
        Ok::<_, Error>((m.total_mass(), corner_box_masses(&m, &widths)?))
    })?;

    let mut totals = Table::new("total_mass", &["replica", "total_mass"]);
    let mut masses = Table::new("masses", &["replica", "box_id", "lambda", "mass"]);
    for (r, (t, boxes)) in rows.iter().enumerate() {
        totals.push(row![r, *t]);
        for (b, (&l, &m)) in cfg.lambda_grid.iter().zip(boxes).enumerate() {
            masses.push(row![r, b, l, m]);
        }
    }
    let t: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let (mean, se) = mean_se(&t);
    let ok = (mean - 1.0).abs() <= 3.0 * se || (mean == 1.0 && se == 0.0);
    out.checks.push(Check::flag("mean_total_mass", mean, 1.0, format!("3 SE = {}", 3.0 * se), ok));
    let d = cfg.dimension as i32;
    let mut points = Vec::new();
    for (b, &l) in cfg.lambda_grid.iter().enumerate() {
        let xs: Vec<f64> = rows.iter().map(|r| r.1[b]).collect();
        let (mean, se) = mean_se(&xs);
        let expect = l.powi(d);
        let ok = (mean - expect).abs() <= 3.0 * se || (mean - expect).abs() <= 1e-12;
        out.checks.push(Check::flag(format!("mean_box_mass_lambda_{l}"), mean, expect, format!("3 SE = {}", 3.0 * se), ok));
        points.push((l, mean));
    }
    out.plots.push((
        "box_means".into(),
        Scatter {
            title: "Mean corner-box mass".into(),
            x_label: "lambda".into(),
            y_label: "E[M(box)]".into(),
            y_axis: Axis::Log10,
            series: vec![("empirical".into(), points)],
        },
    ));
    out.tables.push(totals);
    out.tables.push(masses);
    Ok(out)
}
