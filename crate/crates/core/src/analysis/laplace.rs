//! Empirical comparison of `E[exp(-u Mbar(A))]` with
//! `E[exp(-Gamma(1-alpha)/alpha u^alpha M(A))]`.

use super::stats::{bootstrap_mean, BootstrapSpec};
use crate::atomic::laplace_coefficient;
use crate::error::{invalid, Error, Result};

/// Confidence level of the bootstrap intervals.
pub const CI_LEVEL: f64 = 0.95;

#[derive(Clone, Debug, PartialEq)]
pub struct LaplaceRow {
    pub u: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_ci: (f64, f64),
    pub rhs_ci: (f64, f64),
}

impl LaplaceRow {
    pub fn difference(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn overlap(&self) -> bool {
        self.lhs_ci.0 <= self.rhs_ci.1 && self.rhs_ci.0 <= self.lhs_ci.1
    }
}

fn compare(lhs_terms: Vec<f64>, rhs_terms: Vec<f64>, u: f64, boot: BootstrapSpec, salt: u32) -> LaplaceRow {
    let (lhs, lhs_ci) = bootstrap_mean(&lhs_terms, boot, 2 * salt, CI_LEVEL);
    let (rhs, rhs_ci) = bootstrap_mean(&rhs_terms, boot, 2 * salt + 1, CI_LEVEL);
    LaplaceRow { u, lhs, rhs, lhs_ci, rhs_ci }
}

/// One row per `u`. `mbar` and `m` are masses of the same box from
/// independent runs.
pub fn verify_laplace(mbar: &[f64], m: &[f64], alpha: f64, u_grid: &[f64], boot: BootstrapSpec) -> Result<Vec<LaplaceRow>> {
    if mbar.is_empty() || m.is_empty() {
        return Err(Error::Empty("Laplace verification needs samples on both sides".into()));
    }
    let c = laplace_coefficient(alpha)?;
    let mut rows = Vec::with_capacity(u_grid.len());
    for (i, &u) in u_grid.iter().enumerate() {
        if !(u >= 0.0) {
            return Err(invalid(format!("u = {u} must be nonnegative")));
        }
        if u == 0.0 {
            rows.push(LaplaceRow { u, lhs: 1.0, rhs: 1.0, lhs_ci: (1.0, 1.0), rhs_ci: (1.0, 1.0) });
            continue;
        }
        let ua = c * u.powf(alpha);
        let lhs: Vec<f64> = mbar.iter().map(|x| (-u * x).exp()).collect();
        let rhs: Vec<f64> = m.iter().map(|x| (-ua * x).exp()).collect();
        rows.push(compare(lhs, rhs, u, boot, i as u32));
    }
    Ok(rows)
}

/// Two disjoint boxes at once: `E[exp(-u1 Mbar(A) - u2 Mbar(B))]` against
/// `E[exp(-c (u1^alpha M(A) + u2^alpha M(B)))]`. The row's `u` is `u1`.
pub fn verify_laplace_joint(
    mbar: &[(f64, f64)],
    m: &[(f64, f64)],
    alpha: f64,
    u_pairs: &[(f64, f64)],
    boot: BootstrapSpec,
) -> Result<Vec<LaplaceRow>> {
    if mbar.is_empty() || m.is_empty() {
        return Err(Error::Empty("Laplace verification needs samples on both sides".into()));
    }
    let c = laplace_coefficient(alpha)?;
    let mut rows = Vec::with_capacity(u_pairs.len());
    for (i, &(u1, u2)) in u_pairs.iter().enumerate() {
        if !(u1 >= 0.0 && u2 >= 0.0) {
            return Err(invalid("u must be nonnegative"));
        }
        let (a1, a2) = (c * u1.powf(alpha), c * u2.powf(alpha));
        let lhs: Vec<f64> = mbar.iter().map(|(x, y)| (-u1 * x - u2 * y).exp()).collect();
        let rhs: Vec<f64> = m.iter().map(|(x, y)| (-a1 * x - a2 * y).exp()).collect();
        rows.push(compare(lhs, rhs, u1, boot, 1000 + i as u32));
    }
    Ok(rows)
}
