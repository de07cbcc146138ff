//! Power-law spectrum estimation: regress `ln E[mu(B_lambda)^q]` on `ln lambda`.

use super::stats::{bootstrap, ols, BootstrapSpec};
use crate::atomic::log_sum_exp;
use crate::error::{invalid, Error, Result};

/// Box masses per replica and radius, stored as logarithms so that atomic
/// measures with huge masses and empty boxes (`-inf`) are representable.
#[derive(Clone, Debug, Default)]
pub struct MassSamples {
    pub lambdas: Vec<f64>,
    /// `ln_masses[replica][j]` is `ln mu(B_{lambdas[j]})` in that replica.
    pub ln_masses: Vec<Vec<f64>>,
}

impl MassSamples {
    pub fn new(lambdas: Vec<f64>) -> Self {
        Self { lambdas, ln_masses: Vec::new() }
    }

    pub fn push_masses(&mut self, masses: &[f64]) {
        self.ln_masses.push(masses.iter().map(|m| m.ln()).collect());
    }

    pub fn push_ln_masses(&mut self, ln_masses: Vec<f64>) {
        self.ln_masses.push(ln_masses);
    }

    pub fn replicas(&self) -> usize {
        self.ln_masses.len()
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumFit {
    pub q_grid: Vec<f64>,
    pub slopes: Vec<f64>,
    pub stderr: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub r2: Vec<f64>,
    /// `ln` of the empirical moment, `[q][lambda]`.
    pub ln_moments: Vec<Vec<f64>>,
}

/// `ln mean_i exp(q l_i)`, the log of the empirical `q`-th moment.
pub fn ln_moment(ln_values: &[f64], q: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let terms: Vec<f64> = ln_values.iter().map(|l| q * l).collect();
    log_sum_exp(&terms) - (ln_values.len() as f64).ln()
}

fn column(samples: &MassSamples, j: usize, idx: Option<&[usize]>) -> Vec<f64> {
    match idx {
        Some(idx) => idx.iter().map(|&r| samples.ln_masses[r][j]).collect(),
        None => samples.ln_masses.iter().map(|row| row[j]).collect(),
    }
}

fn fit_slopes(samples: &MassSamples, q: f64, idx: Option<&[usize]>) -> Result<(f64, f64, Vec<f64>)> {
    let x: Vec<f64> = samples.lambdas.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = (0..samples.lambdas.len()).map(|j| ln_moment(&column(samples, j, idx), q)).collect();
    if let Some(j) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("moment of order {q} at lambda = {}", samples.lambdas[j])));
    }
    let fit = ols(&x, &y)?;
    Ok((fit.slope, fit.r2, y))
}

/// Least-squares slopes per `q` with standard errors from a replica bootstrap
/// (the same resampled replicas are used at every radius).
pub fn estimate_spectrum(samples: &MassSamples, q_grid: &[f64], boot: BootstrapSpec) -> Result<SpectrumFit> {
    let mut distinct = samples.lambdas.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(invalid("spectrum estimation needs at least 4 distinct radii"));
    }
    if samples.lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(invalid("radii must be positive"));
    }
    if samples.replicas() < 2 {
        return Err(Error::Empty("no replicas".into()));
    }
    if samples.ln_masses.iter().any(|r| r.len() != samples.lambdas.len()) {
        return Err(invalid("every replica needs one mass per radius"));
    }
    if q_grid.is_empty() {
        return Err(Error::Empty("q grid".into()));
    }
    let mut fit = SpectrumFit {
        q_grid: q_grid.to_vec(),
        slopes: Vec::new(),
        stderr: Vec::new(),
        lambda_grid: samples.lambdas.clone(),
        r2: Vec::new(),
        ln_moments: Vec::new(),
    };
    for (qi, &q) in q_grid.iter().enumerate() {
        let (slope, r2, y) = fit_slopes(samples, q, None)?;
        let reps = bootstrap(samples.replicas(), boot, qi as u32, |idx| {
            fit_slopes(samples, q, Some(idx)).map(|f| f.0).unwrap_or(f64::NAN)
        });
        let finite: Vec<f64> = reps.into_iter().filter(|v| v.is_finite()).collect();
        let se = if finite.len() > 1 { super::stats::variance(&finite).sqrt() } else { f64::NAN };
        fit.slopes.push(slope);
        fit.r2.push(r2);
        fit.stderr.push(se);
        fit.ln_moments.push(y);
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::xi;

    #[test]
    fn synthetic_power_laws_are_recovered_exactly() {
        // Masses with m^q = C lambda^{xi(q)} in every replica.
        let lambdas: Vec<f64> = (2..=6).map(|j| 0.5f64.powi(j)).collect();
        let q_grid = [0.5, 1.0, 1.5];
        for &q in &q_grid {
            let mut s = MassSamples::new(lambdas.clone());
            let target = xi(0.5, 1, q);
            let c = 1.7f64;
            s.push_ln_masses(lambdas.iter().map(|l| (c * l.powf(target)).ln() / q).collect());
            s.push_ln_masses(lambdas.iter().map(|l| (c * l.powf(target)).ln() / q).collect());
            let fit = estimate_spectrum(&s, &[q], BootstrapSpec::new(20, 1)).unwrap();
            assert!((fit.slopes[0] - target).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_order_has_zero_slope() {
        let mut s = MassSamples::new(vec![0.5, 0.25, 0.125, 0.0625]);
        s.push_masses(&[0.3, 0.2, 0.01, 0.5]);
        s.push_masses(&[0.1, 0.7, 0.02, 0.05]);
        let fit = estimate_spectrum(&s, &[0.0], BootstrapSpec::new(10, 1)).unwrap();
        assert_eq!(fit.slopes[0], 0.0);
    }

    #[test]
    fn too_few_radii_or_infinite_moments_fail() {
        let mut s = MassSamples::new(vec![0.5, 0.25, 0.125]);
        s.push_masses(&[1.0, 1.0, 1.0]);
        s.push_masses(&[1.0, 1.0, 1.0]);
        assert!(estimate_spectrum(&s, &[1.0], BootstrapSpec::new(10, 1)).is_err());
        let mut s = MassSamples::new(vec![0.5, 0.25, 0.125, 0.1]);
        s.push_masses(&[1.0, 1.0, 0.0, 1.0]);
        s.push_masses(&[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(estimate_spectrum(&s, &[-1.0], BootstrapSpec::new(10, 1)), Err(Error::NonFinite(_))));
    }
}
