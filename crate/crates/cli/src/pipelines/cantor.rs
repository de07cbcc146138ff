//! Covering-sum dimension of the triadic Cantor set under `M` (kpz) and under
//! `Mbar` next to `M` (duality).
//!
//! In the matched design covering level `k` gets its own replicas with the
//! field at level `n 3^{k - k_min}`, so the field resolves the covering scale
//! at every level. Tables from all replicas are annealed per level. The fixed
//! design uses level `n` for every `k` and shares replicas across levels.

use gmclab_core::analysis::covering::{
    annealed, covering_sums, dimension_estimate, dimension_with_ci, CoveringSumTable, DimensionEstimate, SetSpec,
};
use gmclab_core::analysis::kpz::{kpz_solve, kpz_solve_dual};
use gmclab_core::atomic::{build_subordinated, Construction, ZMin};
use gmclab_core::chaos::{build_chaos, LatticeMeasure};
use gmclab_core::field::FieldSampler;
use gmclab_core::kernels::LevelRange;
use gmclab_core::lattice::Lattice;
use gmclab_core::par::try_map_indexed;
use gmclab_core::rng::{Purpose, RngStream};
use gmclab_core::{Error, Result};

use super::{alpha, atom_purpose, boot, build_atomic, kernel_spec, z_min, Outcome};
use crate::config::{Design, ExperimentConfig};
use crate::output::{Axis, Check, Scatter, Table};
use crate::row;

/// Tolerance of the Lebesgue control against `ln 2 / ln 3`.
pub const LEBESGUE_TOL: f64 = 0.01;
/// Tolerance of the algebraic dual identity.
pub const IDENTITY_TOL: f64 = 1e-12;
const IDENTITY_POINTS: usize = 100;

fn cantor_dim() -> f64 {
    SetSpec::Cantor.dimension()
}

/// One covering-level group: its field level and the covering levels it serves.
struct Group {
    level: u32,
    covering: Vec<u32>,
    k_offset: u32,
}

fn groups(cfg: &ExperimentConfig) -> Vec<Group> {
    let k_min = cfg.cantor_levels.iter().copied().min().unwrap_or(0);
    match cfg.design {
        Design::Matched => cfg
            .cantor_levels
            .iter()
            .map(|&k| Group { level: cfg.level * 3u32.pow(k - k_min), covering: vec![k], k_offset: k - k_min })
            .collect(),
        Design::Fixed => vec![Group { level: cfg.level, covering: cfg.cantor_levels.clone(), k_offset: 0 }],
    }
}

/// Cells whose center lies in the level-`k` Cantor approximation.
fn cantor_mask(lattice: &Lattice, k: u32) -> Vec<bool> {
    (0..lattice.sites())
        .map(|i| {
            let mut x = lattice.site_center(i)[0];
            (0..k).all(|_| {
                x *= 3.0;
                let digit = x.floor();
                x -= digit;
                digit != 1.0
            })
        })
        .collect()
}

struct Samples {
    m: Vec<CoveringSumTable>,
    mbar: Vec<CoveringSumTable>,
}

fn sample(cfg: &ExperimentConfig, s_grid: &[f64], dual: Option<(f64, ZMin)>, out: &mut Outcome) -> Result<Samples> {
    let spec = kernel_spec(cfg)?;
    let lattice = Lattice::unit(cfg.dimension, cfg.resolution)?;
    let seed = cfg.master_seed;
    let d = cfg.dimension as f64;
    let reps = cfg.replicas as u64;
    let mut m_tables = Vec::new();
    let mut mbar_tables = Vec::new();
    for g in groups(cfg) {
        let sampler = FieldSampler::new(&spec, &lattice, LevelRange::upto(g.level)?, cfg.backend)?;
        let k_max = *g.covering.iter().max().expect("nonempty covering levels");
        let mask = dual.map(|_| cantor_mask(&lattice, k_max));
        out.seeds(seed, 0..reps, g.level, Purpose::Field, &format!("field covering levels {:?}", g.covering));
        if dual.is_some() {
            out.seeds(seed, 0..reps, g.level, atom_purpose(cfg.construction), "atoms");
        }
        let rows = try_map_indexed(cfg.replicas, |i| {
            let f = sampler.sample_field(seed, i as u64);
            let m = build_chaos(&f, cfg.gamma2)?;
            let tm = covering_sums(&m, SetSpec::Cantor, &g.covering, s_grid)?;
            let tbar = match (dual, &mask) {
                (Some((a, z0)), Some(mask)) => {
                    let z = ZMin::from_ln(z0.ln() - g.k_offset as f64 * 3f64.ln() * d / a)?;
                    let bar = match cfg.construction {
                        Construction::Subordinated => {
                            // Atoms off the covered set never enter a covering sum.
                            let masses = m.masses().iter().zip(mask).map(|(&x, &keep)| if keep { x } else { 0.0 }).collect();
                            let restricted = LatticeMeasure::from_masses(&lattice, masses, m.meta().clone())?;
                            let mut rng = RngStream::new(seed, i as u64, g.level, Purpose::Subordination).rng();
                            build_subordinated(&restricted, a, z, &mut rng)?
                        }
                        Construction::Direct => build_atomic(Construction::Direct, &f, cfg.gamma2, a, z, seed, i as u64, g.level)?,
                    };
                    let s_bar: Vec<f64> = s_grid.iter().map(|s| a * s).collect();
                    Some(covering_sums(&bar, SetSpec::Cantor, &g.covering, &s_bar)?)
                }
                _ => None,
            };
            Ok::<_, Error>((tm, tbar))
        })?;
        for (tm, tbar) in rows {
            m_tables.push(tm);
            mbar_tables.extend(tbar);
        }
    }
    Ok(Samples { m: m_tables, mbar: mbar_tables })
}

fn covering_rows(t: &mut Table, measure: &str, tables: &[CoveringSumTable]) -> Result<CoveringSumTable> {
    let refs: Vec<&CoveringSumTable> = tables.iter().collect();
    let a = annealed(&refs)?;
    for (li, &n) in a.levels.iter().enumerate() {
        for (si, &s) in a.s_grid.iter().enumerate() {
            t.push(row![measure, s, n, a.ln_sums[li][si], a.sum(li, si)]);
        }
    }
    Ok(a)
}

fn estimate_rows(t: &mut Table, slopes: &mut Table, measure: &str, e: &DimensionEstimate, theory: f64, pass: bool) {
    let (lo, hi) = e.ci.unwrap_or((f64::NAN, f64::NAN));
    t.push(row![measure, e.s_star, lo, hi, theory, pass]);
    for &(s, a) in &e.slopes {
        slopes.push(row![measure, s, a]);
    }
}

fn lebesgue_control(cfg: &ExperimentConfig, out: &mut Outcome, dims: &mut Table, slopes: &mut Table) -> Result<()> {
    let lattice = Lattice::unit(cfg.dimension, cfg.resolution)?;
    let leb = LatticeMeasure::lebesgue(&lattice);
    let table = covering_sums(&leb, SetSpec::Cantor, &cfg.cantor_levels, &cfg.s_grid)?;
    let e = dimension_estimate(&table)?;
    let c = Check::within("lebesgue_control", e.s_star, cantor_dim(), LEBESGUE_TOL);
    estimate_rows(dims, slopes, "lebesgue", &e, cantor_dim(), c.pass);
    out.checks.push(c);
    Ok(())
}

fn plot(tables: &[(&str, &CoveringSumTable)], s_index: usize) -> Scatter {
    Scatter {
        title: "Annealed covering sums".into(),
        x_label: "covering level".into(),
        y_label: "ln sum mu(I)^s".into(),
        y_axis: Axis::Linear,
        series: tables
            .iter()
            .map(|(name, t)| {
                let s = t.s_grid[s_index.min(t.s_grid.len() - 1)];
                (format!("{name} s={s}"), t.levels.iter().enumerate().map(|(li, &n)| (n as f64, t.ln_sums[li][s_index.min(t.s_grid.len() - 1)])).collect())
            })
            .collect(),
    }
}

const COVERING_HEADER: [&str; 5] = ["measure", "s", "level", "ln_sum", "sum"];
const DIMENSION_HEADER: [&str; 6] = ["measure", "estimate", "ci_lo", "ci_hi", "reference", "pass"];

pub fn run_kpz(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let root = kpz_solve(cantor_dim(), cfg.gamma2, cfg.dimension)?;
    let samples = sample(cfg, &cfg.s_grid, None, &mut out)?;
    let mut covering = Table::new("covering", &COVERING_HEADER);
    let mut dims = Table::new("dimension", &DIMENSION_HEADER);
    let mut slopes = Table::new("covering_slopes", &["measure", "s", "slope"]);
    let m = covering_rows(&mut covering, "M", &samples.m)?;
    let e = dimension_with_ci(&samples.m, boot(cfg), cfg.ci_level)?;
    let c = Check::within("kpz_dimension", e.s_star, root, cfg.tolerance);
    estimate_rows(&mut dims, &mut slopes, "M", &e, root, c.pass);
    out.checks.push(c);
    lebesgue_control(cfg, &mut out, &mut dims, &mut slopes)?;
    out.plots.push(("covering".into(), plot(&[("M", &m)], cfg.s_grid.len() / 2)));
    out.tables.push(covering);
    out.tables.push(dims);
    out.tables.push(slopes);
    Ok(out)
}

pub fn run_duality(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let a = alpha(cfg)?;
    let k_min = cfg.cantor_levels.iter().copied().min().unwrap_or(0);
    let z0 = z_min(cfg, 3f64.powi(-(k_min as i32)) * 2f64.powi(k_min as i32), a)?;
    let samples = sample(cfg, &cfg.s_grid, Some((a, z0)), &mut out)?;

    let mut covering = Table::new("covering", &COVERING_HEADER);
    let mut dims = Table::new("dimension", &DIMENSION_HEADER);
    let mut slopes = Table::new("covering_slopes", &["measure", "s", "slope"]);
    let m = covering_rows(&mut covering, "M", &samples.m)?;
    let mbar = covering_rows(&mut covering, "Mbar", &samples.mbar)?;
    let root = kpz_solve(cantor_dim(), cfg.gamma2, cfg.dimension)?;
    let em = dimension_with_ci(&samples.m, boot(cfg), cfg.ci_level)?;
    let eb = dimension_with_ci(&samples.mbar, boot(cfg), cfg.ci_level)?;
    let target = a * em.s_star;
    let cm = Check::within("kpz_dimension", em.s_star, root, cfg.tolerance);
    let cb = Check::within("dual_dimension", eb.s_star, target, cfg.tolerance);
    estimate_rows(&mut dims, &mut slopes, "M", &em, root, cm.pass);
    estimate_rows(&mut dims, &mut slopes, "Mbar", &eb, target, cb.pass);
    out.checks.push(cm);
    out.checks.push(cb);
    lebesgue_control(cfg, &mut out, &mut dims, &mut slopes)?;

    let mut identity = Table::new("dual_identity", &["dim_leb", "kpz", "kpz_dual", "residual"]);
    let mut worst: f64 = 0.0;
    for i in 1..=IDENTITY_POINTS {
        let x = i as f64 / IDENTITY_POINTS as f64 * cfg.dimension as f64;
        let k = kpz_solve(x, cfg.gamma2, cfg.dimension)?;
        let kd = kpz_solve_dual(x, cfg.gamma2, cfg.dimension)?;
        let r = kd - a * k;
        worst = worst.max(r.abs());
        identity.push(row![x, k, kd, r]);
    }
    out.checks.push(Check::within("dual_identity", worst, 0.0, IDENTITY_TOL));

    out.plots.push(("covering".into(), plot(&[("M", &m), ("Mbar", &mbar)], cfg.s_grid.len() / 2)));
    out.tables.push(covering);
    out.tables.push(dims);
    out.tables.push(slopes);
    out.tables.push(identity);
    Ok(out)
}
