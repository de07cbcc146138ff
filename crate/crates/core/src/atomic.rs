//! Atomic chaos: an independently scattered alpha-stable measure reweighted by
//! the exponential of the field.
//!
//! Atom sizes are Pareto with index `alpha`, so for small `alpha` they overflow
//! `f64` quickly (`z ~ z_min U^{-1/alpha}`). Sizes and masses are therefore kept
//! as natural logarithms throughout; [`AtomicMeasure::masses`] exponentiates on
//! demand.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::chaos::LatticeMeasure;
use crate::error::{invalid, Error, Result};
use crate::field::FieldGrid;
use crate::lattice::{Point, Region};
use crate::quad::{integrate, Tolerance};

/// `alpha = gamma^2 / (2d)`, the stability index paired with `gamma`.
pub fn alpha_from_gamma(gamma2: f64, d: usize) -> Result<f64> {
    let alpha = gamma2 / (2.0 * d as f64);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaRange(alpha));
    }
    Ok(alpha)
}

/// Dual coupling `gamma_bar = gamma / alpha = 2d / gamma`.
pub fn gamma_bar(gamma2: f64, d: usize) -> Result<f64> {
    Ok(gamma2.sqrt() / alpha_from_gamma(gamma2, d)?)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaRange(alpha))
    }
}

/// Smallest atom size kept, stored as its logarithm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZMin {
    ln: f64,
}

impl ZMin {
    pub fn new(z: f64) -> Result<Self> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(invalid(format!("z_min must be positive, got {z}")));
        }
        Ok(Self { ln: z.ln() })
    }

    pub fn from_ln(ln: f64) -> Result<Self> {
        if !ln.is_finite() {
            return Err(invalid("ln z_min must be finite"));
        }
        Ok(Self { ln })
    }

    pub fn ln(&self) -> f64 {
        self.ln
    }

    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    /// z_min giving `count` expected atoms on a set of intensity mass `volume`.
    pub fn for_expected_count(volume: f64, alpha: f64, count: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(volume > 0.0 && count > 0.0) {
            return Err(invalid("volume and count must be positive"));
        }
        Self::from_ln(-(count * alpha / volume).ln() / alpha)
    }

    /// z_min whose expected discarded mass is `ratio` times the size of the
    /// largest atom scale `(volume/alpha)^{1/alpha}`.
    pub fn for_truncation_ratio(volume: f64, alpha: f64, ratio: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(volume > 0.0 && ratio > 0.0) {
            return Err(invalid("volume and ratio must be positive"));
        }
        // volume z^{1-alpha}/(1-alpha) = ratio (volume/alpha)^{1/alpha}
        let target = ratio.ln() + (volume / alpha).ln() / alpha;
        Self::from_ln((target - volume.ln() + (1.0 - alpha).ln()) / (1.0 - alpha))
    }

    /// Expected number of atoms above z_min on intensity mass `volume`.
    pub fn expected_count(&self, volume: f64, alpha: f64) -> f64 {
        volume * (-alpha * self.ln).exp() / alpha
    }

    /// Conditional mean of the discarded small-jump mass on intensity mass `volume`.
    pub fn truncation_bound(&self, volume: f64, alpha: f64) -> f64 {
        volume * ((1.0 - alpha) * self.ln).exp() / (1.0 - alpha)
    }
}

/// Atoms of the Poisson measure with intensity `dx dz / z^{1+alpha}` on
/// `region x [z_min, inf)`.
#[derive(Clone, Debug)]
pub struct StableAtoms {
    region: Region,
    alpha: f64,
    z_min: ZMin,
    positions: Vec<Point>,
    ln_z: Vec<f64>,
}

fn pareto_ln<R: Rng + ?Sized>(rng: &mut R, alpha: f64, z_min: ZMin) -> f64 {
    let e: f64 = Exp1.sample(rng);
    z_min.ln + e / alpha
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let p = Poisson::new(mean).map_err(|e| invalid(format!("Poisson mean {mean}: {e}")))?;
    Ok(p.sample(rng) as u64)
}

fn uniform_in<R: Rng + ?Sized>(rng: &mut R, region: &Region) -> Point {
    let mut p = [0.0; 2];
    for k in 0..region.d {
        p[k] = region.lo[k] + (region.hi[k] - region.lo[k]) * rng.random::<f64>();
    }
    p
}

pub fn sample_stable_atoms<R: Rng + ?Sized>(region: &Region, alpha: f64, z_min: ZMin, rng: &mut R) -> Result<StableAtoms> {
    check_alpha(alpha)?;
    let count = poisson(rng, z_min.expected_count(region.volume(), alpha))?;
    let mut positions = Vec::with_capacity(count as usize);
    let mut ln_z = Vec::with_capacity(count as usize);
    for _ in 0..count {
        positions.push(uniform_in(rng, region));
        ln_z.push(pareto_ln(rng, alpha, z_min));
    }
    Ok(StableAtoms { region: region.clone(), alpha, z_min, positions, ln_z })
}

impl StableAtoms {
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn z_min(&self) -> ZMin {
        self.z_min
    }

    pub fn len(&self) -> usize {
        self.ln_z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_z.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn ln_sizes(&self) -> &[f64] {
        &self.ln_z
    }

    pub fn truncation_bound(&self) -> f64 {
        self.z_min.truncation_bound(self.region.volume(), self.alpha)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    Direct,
    Subordinated,
}

impl Construction {
    pub fn tag(self) -> &'static str {
        match self {
            Construction::Direct => "direct",
            Construction::Subordinated => "subordinated",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "direct" => Ok(Construction::Direct),
            "subordinated" => Ok(Construction::Subordinated),
            other => Err(invalid(format!("unknown construction '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeta {
    pub gamma2: f64,
    pub alpha: f64,
    pub level: u32,
    pub construction: Construction,
    pub z_min: ZMin,
}

/// Finite sum of point masses, masses stored as logarithms.
#[derive(Clone, Debug)]
pub struct AtomicMeasure {
    d: usize,
    positions: Vec<Point>,
    ln_z: Vec<f64>,
    ln_mass: Vec<f64>,
    meta: AtomicMeta,
}

/// `ln sum exp(x_i)`, `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + s.ln()
}

/// Direct construction: atom `(x, z)` gets mass
/// `z exp((gamma/alpha) X(x) - gamma^2/(2 alpha) Var X(x))`.
pub fn build_atomic_direct(field: &FieldGrid, gamma2: f64, alpha: f64, atoms: &StableAtoms) -> Result<AtomicMeasure> {
    check_alpha(alpha)?;
    if (atoms.alpha - alpha).abs() > 1e-15 * alpha {
        return Err(invalid(format!("atoms were sampled with alpha = {}, not {alpha}", atoms.alpha)));
    }
    if !(gamma2 >= 0.0) {
        return Err(invalid("gamma^2 must be nonnegative"));
    }
    let lattice = field.lattice();
    if atoms.region.d != lattice.dim() {
        return Err(Error::LatticeMismatch);
    }
    let a = gamma2.sqrt() / alpha;
    let b = gamma2 / (2.0 * alpha);
    let values = field.values();
    let var = field.variance();
    let mut ln_mass = Vec::with_capacity(atoms.len());
    for (p, &lz) in atoms.positions.iter().zip(&atoms.ln_z) {
        let c = lattice.cell_of(p).ok_or_else(|| Error::OutsideDomain(p[..lattice.dim()].to_vec()))?;
        ln_mass.push(lz + a * values[c] - b * var.at(c));
    }
    let meta = AtomicMeta { gamma2, alpha, level: field.level(), construction: Construction::Direct, z_min: atoms.z_min };
    Ok(AtomicMeasure { d: lattice.dim(), positions: atoms.positions.clone(), ln_z: atoms.ln_z.clone(), ln_mass, meta })
}

/// Stable measure subordinated to a chaos realization: Poisson atoms with
/// intensity `M(dx) dz / z^{1+alpha}`, positions uniform inside their cell.
///
/// The per-cell Poisson counts are drawn as one Poisson total followed by
/// independent cell choices proportional to `M(c)`, which has the same law.
pub fn build_subordinated<R: Rng + ?Sized>(m: &LatticeMeasure, alpha: f64, z_min: ZMin, rng: &mut R) -> Result<AtomicMeasure> {
    check_alpha(alpha)?;
    let lattice = m.lattice();
    let masses = m.masses();
    let mut cumulative = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    for &x in masses {
        acc += x;
        cumulative.push(acc);
    }
    let total = acc;
    let count = poisson(rng, z_min.expected_count(total, alpha))?;
    let h = lattice.spacing();
    let o = lattice.origin();
    let mut positions = Vec::with_capacity(count as usize);
    let mut ln_z = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let t = rng.random::<f64>() * total;
        let c = cumulative.partition_point(|&v| v <= t).min(masses.len() - 1);
        let ij = lattice.coords(c);
        let mut p = [0.0; 2];
        for k in 0..lattice.dim() {
            p[k] = o[k] + (ij[k] as f64 + rng.random::<f64>()) * h;
        }
        positions.push(p);
        ln_z.push(pareto_ln(rng, alpha, z_min));
    }
    let meta = AtomicMeta {
        gamma2: m.meta().gamma2,
        alpha,
        level: m.meta().level,
        construction: Construction::Subordinated,
        z_min,
    };
    Ok(AtomicMeasure { d: lattice.dim(), positions, ln_mass: ln_z.clone(), ln_z, meta })
}

impl AtomicMeasure {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn meta(&self) -> &AtomicMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.ln_mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_mass.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn ln_sizes(&self) -> &[f64] {
        &self.ln_z
    }

    pub fn ln_masses(&self) -> &[f64] {
        &self.ln_mass
    }

    /// `ln(mass / z)`, the logarithm of the field weight of each atom.
    pub fn ln_weights(&self) -> Vec<f64> {
        self.ln_mass.iter().zip(&self.ln_z).map(|(m, z)| m - z).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.ln_mass.iter().map(|x| x.exp()).collect()
    }

    pub fn ln_total_mass(&self) -> f64 {
        log_sum_exp(&self.ln_mass)
    }

    pub fn total_mass(&self) -> f64 {
        self.ln_total_mass().exp()
    }

    /// Log-masses of the atoms in the half-open box `[lo, hi)`.
    fn ln_in(&self, region: &Region) -> Vec<f64> {
        self.positions
            .iter()
            .zip(&self.ln_mass)
            .filter(|(p, _)| region.contains(p))
            .map(|(_, &m)| m)
            .collect()
    }

    pub fn ln_measure_box(&self, region: &Region) -> f64 {
        log_sum_exp(&self.ln_in(region))
    }

    pub fn measure_box(&self, region: &Region) -> f64 {
        self.ln_measure_box(region).exp()
    }
}

/// `xi_bar(q) = xi(q / alpha)`.
pub fn xi_bar(gamma2: f64, alpha: f64, d: usize, q: f64) -> f64 {
    crate::chaos::xi(gamma2, d, q / alpha)
}

/// `Gamma(1 - b/a) Gamma(1 - a)^{b/a} / (Gamma(1 - b) a^{b/a})`, linking
/// `E[Mbar(A)^b]` to `E[M(A)^{b/a}]`.
pub fn moment_relation_constant(beta: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(beta >= 0.0) {
        return Err(invalid("beta must be nonnegative"));
    }
    if beta >= alpha {
        return Err(invalid(format!("moment of order {beta} is infinite for alpha = {alpha}")));
    }
    let r = beta / alpha;
    let ln = ln_gamma(1.0 - r) + r * ln_gamma(1.0 - alpha) - ln_gamma(1.0 - beta) - r * alpha.ln();
    Ok(ln.exp())
}

/// `Gamma(1 - alpha) / alpha`, the coefficient of `u^alpha` in the Laplace exponent.
pub fn laplace_coefficient(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(gamma(1.0 - alpha) / alpha)
}

/// `|x^b - b/Gamma(1-b) int_0^inf (1 - e^{-xz}) z^{-1-b} dz|`.
///
/// `[0, 1]` is integrated in `w = z^{1-b}` and `[1, inf)` in `v = z^{-b}`,
/// which turns both pieces into bounded integrands on `[0, 1]`.
pub fn fractional_moment_identity_check(x: f64, beta: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(invalid("x must be finite and nonnegative"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta = {beta} outside (0, 1)")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let tol = Tolerance { abs: 1e-15, rel: 1e-13, max_intervals: 4000 };
    let head = integrate(
        |w| {
            if w == 0.0 {
                return x / (1.0 - beta);
            }
            let z = w.powf(1.0 / (1.0 - beta));
            -(-x * z).exp_m1() / z / (1.0 - beta)
        },
        0.0,
        1.0,
        tol,
    )?;
    let tail = integrate(
        |v| {
            if v == 0.0 {
                return 1.0 / beta;
            }
            let s = v.powf(1.0 / beta);
            -(-x / s).exp_m1() / beta
        },
        0.0,
        1.0,
        tol,
    )?;
    let rhs = beta / gamma(1.0 - beta) * (head.value + tail.value);
    Ok((x.powf(beta) - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::build_chaos;
    use crate::field::{Backend, FieldSampler};
    use crate::kernels::{KernelSpec, LevelRange};
    use crate::lattice::Lattice;
    use crate::rng::{Purpose, RngStream};

    #[test]
    fn alpha_values() {
        assert_eq!(alpha_from_gamma(1.0, 2).unwrap(), 0.25);
        assert_eq!(alpha_from_gamma(1.0, 1).unwrap(), 0.5);
        assert!(matches!(alpha_from_gamma(2.0, 1), Err(Error::AlphaRange(_))));
        assert!((gamma_bar(1.0, 1).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn xi_bar_values() {
        assert!((xi_bar(1.0, 0.5, 1, 0.25) - 0.625).abs() < 1e-15);
        assert_eq!(xi_bar(1.0, 0.5, 1, 0.0), 0.0);
        for (g2, d) in [(1.0, 1), (0.5, 1), (1.0, 2), (3.6, 2)] {
            let a = alpha_from_gamma(g2, d).unwrap();
            assert!((xi_bar(g2, a, d, a) - d as f64).abs() < 1e-12);
            // duality form (d + gbar^2/2) q - gbar^2/2 q^2
            let gb2 = gamma_bar(g2, d).unwrap().powi(2);
            let q = 0.3 * a;
            let dual = (d as f64 + gb2 / 2.0) * q - gb2 / 2.0 * q * q;
            assert!((xi_bar(g2, a, d, q) - dual).abs() < 1e-12);
        }
    }

    #[test]
    fn moment_constant_matches_high_precision_values() {
        // mpmath at 30 digits.
        assert!((moment_relation_constant(0.25, 0.5).unwrap() - 2.723_288_216_330_671).abs() < 1e-12);
        assert!((moment_relation_constant(0.1, 0.3).unwrap() - 2.064_842_706_582_452).abs() < 1e-12);
        assert_eq!(moment_relation_constant(0.0, 0.5).unwrap(), 1.0);
        assert!(moment_relation_constant(0.5, 0.5).is_err());
        let near = moment_relation_constant(0.4999, 0.5).unwrap();
        let nearer = moment_relation_constant(0.49999, 0.5).unwrap();
        assert!(nearer > near && near > 1e3);
    }

    #[test]
    fn fractional_identity_residuals() {
        assert_eq!(fractional_moment_identity_check(0.0, 0.5).unwrap(), 0.0);
        for (x, b) in [(1.0, 0.5), (2.5, 0.25), (1e-3, 0.9), (40.0, 0.1), (7.0, 0.75)] {
            let r = fractional_moment_identity_check(x, b).unwrap();
            assert!(r < 1e-10, "x={x} b={b} r={r}");
        }
    }

    #[test]
    fn z_min_helpers_are_consistent() {
        let z = ZMin::for_expected_count(0.5, 0.25, 1000.0).unwrap();
        assert!((z.expected_count(0.5, 0.25) - 1000.0).abs() < 1e-9);
        let z = ZMin::for_truncation_ratio(1.0, 0.5, 1e-3).unwrap();
        assert!((z.truncation_bound(1.0, 0.5) - 1e-3 * 4.0).abs() < 1e-15);
        let z = ZMin::new(1.0).unwrap();
        assert_eq!(z.expected_count(1.0, 0.5), 2.0);
    }

    #[test]
    fn stable_atom_counts_follow_poisson_mean() {
        let region = Region::interval(0.0, 1.0).unwrap();
        let z = ZMin::new(1.0).unwrap();
        let reps = 10_000;
        let counts: Vec<f64> = (0..reps)
            .map(|r| {
                let mut rng = RngStream::new(2, r, 0, Purpose::StableAtoms).rng();
                sample_stable_atoms(&region, 0.5, z, &mut rng).unwrap().len() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / reps as f64;
        assert!((mean - 2.0).abs() < 3.0 * (2.0 / reps as f64).sqrt(), "{mean}");
        let mut rng = RngStream::new(2, 0, 0, Purpose::StableAtoms).rng();
        let big = sample_stable_atoms(&region, 0.5, ZMin::new(1e12).unwrap(), &mut rng).unwrap();
        assert!(big.is_empty());
        assert!(sample_stable_atoms(&region, 1.0, z, &mut rng).is_err());
    }

    #[test]
    fn zero_coupling_keeps_raw_sizes() {
        let spec = KernelSpec::exact_1d(1.0).unwrap();
        let lattice = Lattice::unit(1, 64).unwrap();
        let s = FieldSampler::new(&spec, &lattice, LevelRange::upto(4).unwrap(), Backend::Auto).unwrap();
        let field = s.sample_field(1, 0);
        let mut rng = RngStream::new(1, 0, 0, Purpose::StableAtoms).rng();
        let atoms = sample_stable_atoms(&lattice.domain(), 0.5, ZMin::new(1e-3).unwrap(), &mut rng).unwrap();
        let m = build_atomic_direct(&field, 0.0, 0.5, &atoms).unwrap();
        assert_eq!(m.ln_masses(), atoms.ln_sizes());
        assert!(build_atomic_direct(&field, 0.0, 0.4, &atoms).is_err());
        assert!(m.ln_sizes().iter().all(|&z| z >= 1e-3f64.ln()));
    }

    #[test]
    fn subordinated_atoms_follow_the_measure() {
        let lattice = Lattice::unit(1, 8).unwrap();
        let mut masses = vec![0.0; 8];
        masses[3] = 2.0;
        let meta = crate::chaos::ChaosMeta { gamma2: 1.0, level: 1, source: String::new() };
        let m = LatticeMeasure::from_masses(&lattice, masses, meta).unwrap();
        let mut rng = RngStream::new(5, 0, 0, Purpose::Subordination).rng();
        let a = build_subordinated(&m, 0.5, ZMin::new(1e-4).unwrap(), &mut rng).unwrap();
        assert!(a.len() > 100);
        assert!(a.positions().iter().all(|p| p[0] >= 3.0 / 8.0 && p[0] < 4.0 / 8.0));
        let lebesgue = build_chaos(&crate::field::FieldGrid::zeros(&lattice), 0.0).unwrap();
        let b = build_subordinated(&lebesgue, 0.5, ZMin::new(1.0).unwrap(), &mut rng).unwrap();
        assert_eq!(b.meta().construction, Construction::Subordinated);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
