//! Power-law spectrum of `M` or `Mbar` from box masses at several radii.
//!
//! In the matched design each radius `lambda` gets its own lattice on
//! `[0, lambda]^d` with the configured number of cells and field level
//! `n lambda_max / lambda`. For the exact kernels `M_{n/lambda}(lambda A)`
//! then equals `lambda^d e^{Omega} M_n(A)` in law, so the moment slopes are
//! exact at every radius. The fixed design uses one lattice and one level.

use gmclab_core::analysis::spectrum::{estimate_spectrum, MassSamples};
use gmclab_core::atomic::{xi_bar, ZMin};
use gmclab_core::chaos::{build_chaos, corner_box_masses, xi};
use gmclab_core::field::FieldSampler;
use gmclab_core::kernels::LevelRange;
use gmclab_core::lattice::{Lattice, Region};
use gmclab_core::par::try_map_indexed;
use gmclab_core::rng::Purpose;
use gmclab_core::{Error, Result};

use super::chaos::box_widths;
use super::{alpha, atom_purpose, boot, build_atomic, kernel_spec, z_min, Outcome};
use crate::config::{Design, ExperimentConfig, Measure};
use crate::output::{Axis, Check, Scatter, Table};
use crate::row;

struct Radius {
    lambda: f64,
    level: u32,
    sampler: FieldSampler,
    z: Option<ZMin>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = kernel_spec(cfg)?;
    let d = cfg.dimension;
    let atomic = cfg.measure == Measure::Atomic;
    let a = if atomic { Some(alpha(cfg)?) } else { None };
    let top = cfg.lambda_grid.iter().cloned().fold(0.0, f64::max);
    let seed = cfg.master_seed;
    let mut out = Outcome::default();

    let samples = match cfg.design {
        Design::Matched => {
            let base_z = match a {
                Some(a) => Some(z_min(cfg, top.powi(d as i32), a)?),
                None => None,
            };
            let radii = cfg
                .lambda_grid
                .iter()
                .map(|&l| {
                    let level = (cfg.level as f64 * top / l).round() as u32;
                    let lattice = Lattice::new(d, cfg.resolution, [0.0, 0.0], l)?;
                    let sampler = FieldSampler::new(&spec, &lattice, LevelRange::upto(level)?, cfg.backend)?;
                    let z = match (base_z, a) {
                        (Some(z), Some(a)) => Some(ZMin::from_ln(z.ln() + d as f64 / a * (l / top).ln())?),
                        _ => None,
                    };
                    Ok(Radius { lambda: l, level, sampler, z })
                })
                .collect::<Result<Vec<_>>>()?;
            for r in &radii {
                out.seeds(seed, 0..cfg.replicas as u64, r.level, Purpose::Field, &format!("field lambda={}", r.lambda));
                if atomic {
                    out.seeds(seed, 0..cfg.replicas as u64, r.level, atom_purpose(cfg.construction), "atoms");
                }
            }
            let rows = try_map_indexed(cfg.replicas, |rep| {
                radii
                    .iter()
                    .map(|r| {
                        let f = r.sampler.sample_field(seed, rep as u64);
                        match (a, r.z) {
                            (Some(a), Some(z)) => {
                                let m = build_atomic(cfg.construction, &f, cfg.gamma2, a, z, seed, rep as u64, r.level)?;
                                Ok(m.ln_total_mass())
                            }
                            _ => Ok(build_chaos(&f, cfg.gamma2)?.total_mass().ln()),
                        }
                    })
                    .collect::<Result<Vec<f64>>>()
            })?;
            let mut s = MassSamples::new(cfg.lambda_grid.clone());
            for row in rows {
                s.push_ln_masses(row);
            }
            s
        }
        Design::Fixed => {
            let lattice = Lattice::unit(d, cfg.resolution)?;
            let sampler = FieldSampler::new(&spec, &lattice, LevelRange::upto(cfg.level)?, cfg.backend)?;
            let widths = box_widths(&lattice, &cfg.lambda_grid)?;
            let z = match a {
                Some(a) => Some(z_min(cfg, 1.0, a)?),
                None => None,
            };
            out.seeds(seed, 0..cfg.replicas as u64, cfg.level, Purpose::Field, "field");
            if atomic {
                out.seeds(seed, 0..cfg.replicas as u64, cfg.level, atom_purpose(cfg.construction), "atoms");
            }
            let rows = try_map_indexed(cfg.replicas, |rep| {
                let f = sampler.sample_field(seed, rep as u64);
                match (a, z) {
                    (Some(a), Some(z)) => {
                        let m = build_atomic(cfg.construction, &f, cfg.gamma2, a, z, seed, rep as u64, cfg.level)?;
                        cfg.lambda_grid
                            .iter()
                            .map(|&l| Ok(m.ln_measure_box(&Region::new(d, [0.0, 0.0], [l, l])?)))
                            .collect::<Result<Vec<f64>>>()
                    }
                    _ => {
                        let m = build_chaos(&f, cfg.gamma2)?;
                        Ok::<_, Error>(corner_box_masses(&m, &widths)?.into_iter().map(f64::ln).collect())
                    }
                }
            })?;
            let mut s = MassSamples::new(cfg.lambda_grid.clone());
            for row in rows {
                s.push_ln_masses(row);
            }
            s
        }
    };

    let mut masses = Table::new("masses", &["replica", "box_id", "lambda", "mass"]);
    for (r, row) in samples.ln_masses.iter().enumerate() {
        for (b, (&l, &lm)) in samples.lambdas.iter().zip(row).enumerate() {
            masses.push(row![r, b, l, lm.exp()]);
        }
    }
    let fit = estimate_spectrum(&samples, &cfg.q_grid, boot(cfg))?;
    let mut table = Table::new("spectrum", &["q", "slope", "stderr", "theory", "pass"]);
    let mut plot_series = Vec::new();
    for (i, &q) in fit.q_grid.iter().enumerate() {
        let theory = match a {
            Some(a) => xi_bar(cfg.gamma2, a, d, q),
            None => xi(cfg.gamma2, d, q),
        };
        let c = Check::within(format!("slope_q_{q}"), fit.slopes[i], theory, cfg.tolerance);
        table.push(row![q, fit.slopes[i], fit.stderr[i], theory, c.pass]);
        out.checks.push(c);
        let pts = fit.lambda_grid.iter().zip(&fit.ln_moments[i]).map(|(l, m)| (l.ln(), *m)).collect();
        plot_series.push((format!("q={q}"), pts));
    }
    out.plots.push((
        "spectrum".into(),
        Scatter {
            title: "Log moments against log radius".into(),
            x_label: "ln lambda".into(),
            y_label: "ln E[mu(B)^q]".into(),
            y_axis: Axis::Linear,
            series: plot_series,
        },
    ));
    out.tables.push(table);
    out.tables.push(masses);
    Ok(out)
}
