//! Laplace transform relation between `Mbar(A)` and `M(A)`, for both atomic
//! constructions, plus the fractional moment relation it implies.
//!
//! Replica blocks are disjoint so the three samples are independent: direct
//! `Mbar` uses replicas `0..R`, subordinated `R..2R` and `M` itself `2R..3R`.

use gmclab_core::analysis::laplace::{verify_laplace, verify_laplace_joint, LaplaceRow};
use gmclab_core::atomic::{log_sum_exp, moment_relation_constant, Construction};
use gmclab_core::chaos::build_chaos;
use gmclab_core::field::FieldSampler;
use gmclab_core::kernels::LevelRange;
use gmclab_core::lattice::{Lattice, Region};
use gmclab_core::par::try_map_indexed;
use gmclab_core::rng::Purpose;
use gmclab_core::Result;

use super::{alpha, atom_purpose, boot, build_atomic, kernel_spec, z_min, Outcome};
use crate::config::ExperimentConfig;
use crate::output::{Check, Table};
use crate::row;

/// Relative tolerance of the fractional moment relation.
pub const MOMENT_REL_TOL: f64 = 0.05;

const JOINT_U: [(f64, f64); 3] = [(0.5, 2.0), (1.0, 1.0), (2.0, 0.5)];

fn halves(d: usize) -> Result<[Region; 2]> {
    Ok([Region::new(d, [0.0, 0.0], [0.5, 1.0])?, Region::new(d, [0.5, 0.0], [1.0, 1.0])?])
}

fn push_rows(t: &mut Table, construction: &str, rows: &[LaplaceRow], u2: Option<&[(f64, f64)]>) {
    for (i, r) in rows.iter().enumerate() {
        let u2 = u2.map(|p| p[i].1).unwrap_or(f64::NAN);
        t.push(row![
            construction,
            r.u,
            u2,
            r.lhs,
            r.rhs,
            r.lhs_ci.0,
            r.lhs_ci.1,
            r.rhs_ci.0,
            r.rhs_ci.1,
            r.difference(),
            r.overlap()
        ]);
    }
}

const HEADER: [&str; 11] =
    ["construction", "u", "u2", "lhs", "rhs", "ci_lo", "ci_hi", "rhs_ci_lo", "rhs_ci_hi", "difference", "overlap"];

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = kernel_spec(cfg)?;
    let d = cfg.dimension;
    let a = alpha(cfg)?;
    let lattice = Lattice::unit(d, cfg.resolution)?;
    let sampler = FieldSampler::new(&spec, &lattice, LevelRange::upto(cfg.level)?, cfg.backend)?;
    let z = z_min(cfg, 1.0, a)?;
    let seed = cfg.master_seed;
    let r = cfg.replicas as u64;
    let n = cfg.level;
    let [left, right] = halves(d)?;
    let mut out = Outcome::default();
    out.seeds(seed, 0..3 * r, n, Purpose::Field, "field");
    out.seeds(seed, 0..r, n, atom_purpose(Construction::Direct), "direct atoms");
    out.seeds(seed, r..2 * r, n, atom_purpose(Construction::Subordinated), "subordinated atoms");

    // (total, left half, right half) per replica.
    let atomic = |c: Construction, offset: u64| {
        try_map_indexed(cfg.replicas, |i| {
            let f = sampler.sample_field(seed, offset + i as u64);
            let m = build_atomic(c, &f, cfg.gamma2, a, z, seed, offset + i as u64, n)?;
            Ok::<_, gmclab_core::Error>([m.ln_total_mass(), m.ln_measure_box(&left), m.ln_measure_box(&right)].map(f64::exp))
        })
    };
    let direct = atomic(Construction::Direct, 0)?;
    let subordinated = atomic(Construction::Subordinated, r)?;
    let chaos = try_map_indexed(cfg.replicas, |i| {
        let m = build_chaos(&sampler.sample_field(seed, 2 * r + i as u64), cfg.gamma2)?;
        Ok::<_, gmclab_core::Error>([m.total_mass(), m.measure_box(&left)?, m.measure_box(&right)?])
    })?;

    let m_total: Vec<f64> = chaos.iter().map(|x| x[0]).collect();
    let m_pairs: Vec<(f64, f64)> = chaos.iter().map(|x| (x[1], x[2])).collect();
    let mut single = Table::new("laplace", &HEADER);
    let mut joint = Table::new("laplace_joint", &HEADER);
    let mut moments =
        Table::new("moments", &["construction", "beta", "lhs", "rhs", "ratio", "constant", "rel_error", "pass"]);
    let constant = moment_relation_constant(cfg.beta, a)?;
    let ln_mean_pow = |xs: &[f64], p: f64| {
        let t: Vec<f64> = xs.iter().map(|x| p * x.ln()).collect();
        log_sum_exp(&t) - (xs.len() as f64).ln()
    };
    let rhs_moment = ln_mean_pow(&m_total, cfg.beta / a).exp();

    for (name, samples) in [("direct", &direct), ("subordinated", &subordinated)] {
        let totals: Vec<f64> = samples.iter().map(|x| x[0]).collect();
        let rows = verify_laplace(&totals, &m_total, a, &cfg.u_grid, boot(cfg))?;
        for row in &rows {
            out.checks.push(Check::flag(
                format!("laplace_{name}_u_{}", row.u),
                row.difference(),
                0.0,
                format!("{}% CIs overlap", cfg.ci_level * 100.0),
                row.overlap(),
            ));
        }
        push_rows(&mut single, name, &rows, None);

        let pairs: Vec<(f64, f64)> = samples.iter().map(|x| (x[1], x[2])).collect();
        let rows = verify_laplace_joint(&pairs, &m_pairs, a, &JOINT_U, boot(cfg))?;
        for (row, (u1, u2)) in rows.iter().zip(JOINT_U) {
            out.checks.push(Check::flag(
                format!("laplace_joint_{name}_u_{u1}_{u2}"),
                row.difference(),
                0.0,
                "95% CIs overlap",
                row.overlap(),
            ));
        }
        push_rows(&mut joint, name, &rows, Some(&JOINT_U));

        let lhs = ln_mean_pow(&totals, cfg.beta).exp();
        let ratio = lhs / rhs_moment;
        let rel = ratio / constant - 1.0;
        let c = Check::flag(
            format!("moment_relation_{name}"),
            ratio,
            constant,
            format!("relative error <= {MOMENT_REL_TOL}"),
            rel.abs() <= MOMENT_REL_TOL,
        );
        moments.push(row![name, cfg.beta, lhs, rhs_moment, ratio, constant, rel, c.pass]);
        out.checks.push(c);
    }
    out.tables.push(single);
    out.tables.push(joint);
    out.tables.push(moments);
    Ok(out)
}
