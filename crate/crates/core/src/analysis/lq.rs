//! Box-counting proxy of the `L^q` spectrum
//! `tau(q) = lim ln sum_B mu(B)^q / ln r` over dyadic boxes of side `r`,
//! next to the conjectured piecewise formula for the atomic chaos. The
//! packing supremum of the definition is replaced by the dyadic partition.

use super::stats::{mean, ols, std_error};
use super::kpz::q_minus;
use crate::atomic::{log_sum_exp, xi_bar, AtomicMeasure};
use crate::chaos::{xi, LatticeMeasure};
use crate::error::{invalid, Error, Result};
use crate::lattice::Region;

/// Label attached to every emitted comparison table.
pub const LABEL: &str = "CONJECTURE-COMPARISON";

/// Measures with masses on a regular `b^d` block partition of their domain.
pub trait BlockMeasure {
    fn dim(&self) -> usize;
    /// `ln` masses of the `b^d` blocks (`-inf` when empty).
    fn ln_blocks(&self, b: usize) -> Result<Vec<f64>>;
}

impl BlockMeasure for LatticeMeasure {
    fn dim(&self) -> usize {
        self.lattice().dim()
    }

    fn ln_blocks(&self, b: usize) -> Result<Vec<f64>> {
        Ok(self.block_masses(b)?.into_iter().map(f64::ln).collect())
    }
}

/// An atomic measure together with the domain its blocks partition.
pub struct AtomsOn<'a> {
    pub measure: &'a AtomicMeasure,
    pub domain: Region,
}

impl BlockMeasure for AtomsOn<'_> {
    fn dim(&self) -> usize {
        self.measure.dim()
    }

    fn ln_blocks(&self, b: usize) -> Result<Vec<f64>> {
        let d = self.dim();
        let mut bins: Vec<Vec<f64>> = vec![Vec::new(); b.pow(d as u32)];
        for (p, &lm) in self.measure.positions().iter().zip(self.measure.ln_masses()) {
            let mut idx = 0;
            let mut inside = true;
            for k in 0..d {
                let t = (p[k] - self.domain.lo[k]) / (self.domain.hi[k] - self.domain.lo[k]);
                if !(0.0..1.0).contains(&t) {
                    inside = false;
                    break;
                }
                idx = idx * b + ((t * b as f64) as usize).min(b - 1);
            }
            if inside {
                bins[idx].push(lm);
            }
        }
        Ok(bins.iter().map(|v| log_sum_exp(v)).collect())
    }
}

/// Reference values shown beside the estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LqTheory {
    /// `xi(q) - d`, valid for `0 <= q < 2d / gamma^2`.
    Chaos { gamma2: f64, d: usize },
    /// Conjectured: `xi_bar(q) - d` on `[q_-, alpha]`, 0 above `alpha`,
    /// tangent line below `q_-`.
    Atomic { gamma2: f64, alpha: f64, d: usize },
}

impl LqTheory {
    pub fn value(&self, q: f64) -> Result<f64> {
        match *self {
            LqTheory::Chaos { gamma2, d } => Ok(xi(gamma2, d, q) - d as f64),
            LqTheory::Atomic { gamma2, alpha, d } => {
                let qm = q_minus(gamma2, d)?;
                let df = d as f64;
                if q > alpha {
                    Ok(0.0)
                } else if q >= qm {
                    Ok(xi_bar(gamma2, alpha, d, q) - df)
                } else {
                    // xi_bar'(q) = A - 2 B q
                    let a = (df + gamma2 / 2.0) / alpha;
                    let b = gamma2 / (2.0 * alpha * alpha);
                    Ok(xi_bar(gamma2, alpha, d, qm) - df + (a - 2.0 * b * qm) * (q - qm))
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct LqRow {
    pub q: f64,
    pub tau: f64,
    /// Standard error over replicas of the per-replica slopes.
    pub stderr: f64,
    pub reference: f64,
}

#[derive(Clone, Debug)]
pub struct LqSpectrum {
    pub label: &'static str,
    pub depths: Vec<u32>,
    pub rows: Vec<LqRow>,
}

/// `ln sum_B mu(B)^q` over occupied boxes (`q = 0` counts occupied boxes).
fn ln_partition(ln_blocks: &[f64], q: f64) -> f64 {
    let occupied: Vec<f64> = ln_blocks.iter().filter(|v| v.is_finite()).map(|v| q * v).collect();
    log_sum_exp(&occupied)
}

/// Per replica, slope of `ln sum_B mu(B)^q` against `ln 2^-j` over dyadic
/// depths `j`; reported as the replica mean.
pub fn lq_spectrum(measures: &[&dyn BlockMeasure], q_grid: &[f64], depths: &[u32], theory: LqTheory) -> Result<LqSpectrum> {
    if measures.is_empty() {
        return Err(Error::Empty("no measures".into()));
    }
    if depths.len() < 2 {
        return Err(invalid("need at least two box depths"));
    }
    let x: Vec<f64> = depths.iter().map(|&j| -(j as f64) * 2f64.ln()).collect();
    let mut per_q: Vec<Vec<f64>> = vec![Vec::with_capacity(measures.len()); q_grid.len()];
    for m in measures {
        let blocks: Vec<Vec<f64>> = depths.iter().map(|&j| m.ln_blocks(1 << j)).collect::<Result<_>>()?;
        if blocks[0].iter().all(|v| !v.is_finite()) {
            return Err(Error::Empty("measure has no mass".into()));
        }
        for (qi, &q) in q_grid.iter().enumerate() {
            let y: Vec<f64> = blocks.iter().map(|b| ln_partition(b, q)).collect();
            per_q[qi].push(ols(&x, &y)?.slope);
        }
    }
    let rows = q_grid
        .iter()
        .zip(&per_q)
        .map(|(&q, s)| {
            Ok(LqRow {
                q,
                tau: mean(s),
                stderr: if s.len() > 1 { std_error(s) } else { f64::NAN },
                reference: theory.value(q)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LqSpectrum { label: LABEL, depths: depths.to_vec(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    #[test]
    fn lebesgue_spectrum_is_linear() {
        let lattice = Lattice::unit(2, 64).unwrap();
        let m = LatticeMeasure::lebesgue(&lattice);
        let s = lq_spectrum(&[&m], &[0.0, 1.0, 2.0], &[1, 2, 3, 4, 5], LqTheory::Chaos { gamma2: 0.0, d: 2 }).unwrap();
        for r in &s.rows {
            assert!((r.tau - 2.0 * (r.q - 1.0)).abs() < 1e-12, "{r:?}");
            assert!((r.reference - r.tau).abs() < 1e-12);
        }
        assert_eq!(s.label, LABEL);
    }

    #[test]
    fn conjectured_formula_pieces() {
        let t = LqTheory::Atomic { gamma2: 1.0, alpha: 0.5, d: 1 };
        assert!(t.value(0.5).unwrap().abs() < 1e-15);
        assert_eq!(t.value(0.9).unwrap(), 0.0);
        assert!((t.value(0.0).unwrap() + 1.0).abs() < 1e-15);
        // Continuity at q_-.
        let qm = q_minus(1.0, 1).unwrap();
        assert!((t.value(qm - 1e-9).unwrap() - t.value(qm).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn atoms_fall_into_blocks() {
        use crate::atomic::{build_subordinated, ZMin};
        use crate::rng::{Purpose, RngStream};
        let lattice = Lattice::unit(1, 16).unwrap();
        let leb = LatticeMeasure::lebesgue(&lattice);
        let mut rng = RngStream::new(1, 0, 0, Purpose::Subordination).rng();
        let a = build_subordinated(&leb, 0.5, ZMin::new(1e-4).unwrap(), &mut rng).unwrap();
        let on = AtomsOn { measure: &a, domain: lattice.domain() };
        let blocks = on.ln_blocks(4).unwrap();
        let total = log_sum_exp(&blocks);
        assert!((total - a.ln_total_mass()).abs() < 1e-12);
    }
}
