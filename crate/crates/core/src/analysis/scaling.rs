//! Exact stochastic scale invariance of the atomic chaos:
//! `Mbar(lambda A) = lambda^{d/alpha} exp(Omega_lambda / alpha) Mbar(A)` in law,
//! with `Omega_lambda` Gaussian, mean `(gamma^2/2) ln lambda` and variance
//! `gamma^2 ln(1/lambda)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::stats::{bootstrap, ks_two_sample, ols, percentile_interval, quantile, BootstrapSpec, TestResult};
use super::spectrum::ln_moment;
use crate::atomic::xi_bar;
use crate::error::{invalid, Error, Result};
use crate::rng::{Purpose, RngStream};

/// `(mean, variance)` of `Omega_lambda`.
pub fn omega_params(gamma2: f64, lambda: f64) -> (f64, f64) {
    (gamma2 / 2.0 * lambda.ln(), gamma2 * (1.0 / lambda).ln())
}

pub fn sample_omega<R: Rng + ?Sized>(gamma2: f64, lambda: f64, rng: &mut R) -> f64 {
    let (m, v) = omega_params(gamma2, lambda);
    if v == 0.0 {
        return m;
    }
    Normal::new(m, v.sqrt()).expect("positive variance").sample(rng)
}

/// `E[e^{q Omega_lambda}] = lambda^{(gamma^2/2) q - (gamma^2/2) q^2}`.
pub fn omega_mgf(gamma2: f64, lambda: f64, q: f64) -> f64 {
    lambda.powf(gamma2 / 2.0 * q - gamma2 / 2.0 * q * q)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MgfCheck {
    pub empirical: f64,
    pub stderr: f64,
    pub theory: f64,
}

impl MgfCheck {
    pub fn z_score(&self) -> f64 {
        (self.empirical - self.theory) / self.stderr
    }
}

pub fn omega_mgf_self_test(gamma2: f64, lambda: f64, q: f64, replicas: usize, seed: u64) -> MgfCheck {
    let vals: Vec<f64> = (0..replicas)
        .map(|r| {
            let mut rng = RngStream::new(seed, r as u64, 0, Purpose::Omega).rng();
            (q * sample_omega(gamma2, lambda, &mut rng)).exp()
        })
        .collect();
    MgfCheck {
        empirical: super::stats::mean(&vals),
        stderr: super::stats::std_error(&vals),
        theory: omega_mgf(gamma2, lambda, q),
    }
}

#[derive(Clone, Debug)]
pub struct MomentRatio {
    pub lambda: f64,
    pub q: f64,
    /// `E[Mbar(lambda A)^q] / E[Mbar(A)^q]`.
    pub ratio: f64,
    pub ci: (f64, f64),
    pub theory: f64,
}

impl MomentRatio {
    pub fn theory_inside(&self) -> bool {
        self.ci.0 <= self.theory && self.theory <= self.ci.1
    }
}

#[derive(Clone, Debug)]
pub struct QuantileComparison {
    pub lambda: f64,
    pub probabilities: Vec<f64>,
    /// Quantiles of `ln Mbar(lambda A)`.
    pub scaled: Vec<f64>,
    /// Quantiles of `ln(lambda^{d/alpha} e^{Omega/alpha} Mbar(A))`.
    pub predicted: Vec<f64>,
    pub ks: TestResult,
}

#[derive(Clone, Debug)]
pub struct ScalingCheckResult {
    pub lambda_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    pub ratios: Vec<MomentRatio>,
    /// Per q: least-squares slope of `ln ratio` against `ln lambda` (through
    /// `lambda = 1`), with the theoretical `xi_bar(q)`.
    pub slopes: Vec<(f64, f64, f64)>,
    pub quantiles: Vec<QuantileComparison>,
}

pub struct ScalingInputs<'a> {
    /// `ln Mbar(A)` per replica.
    pub base: &'a [f64],
    /// `(lambda, ln Mbar(lambda A) per replica)`.
    pub scaled: Vec<(f64, &'a [f64])>,
}

const PROBABILITIES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[allow(clippy::too_many_arguments)]
pub fn verify_perfect_scaling(
    inputs: &ScalingInputs<'_>,
    gamma2: f64,
    alpha: f64,
    d: usize,
    q_grid: &[f64],
    ci_level: f64,
    boot: BootstrapSpec,
    omega_seed: u64,
) -> Result<ScalingCheckResult> {
    if inputs.base.is_empty() || inputs.scaled.iter().any(|s| s.1.is_empty()) {
        return Err(Error::Empty("scaling check needs samples at every radius".into()));
    }
    for &(l, _) in &inputs.scaled {
        if !(l > 0.0 && l <= 1.0) {
            return Err(invalid(format!("lambda = {l} outside (0, 1]")));
        }
    }
    for &q in q_grid {
        if q >= alpha {
            return Err(invalid(format!("q = {q} >= alpha = {alpha}: moment is infinite")));
        }
    }
    let base = inputs.base;
    let mut ratios = Vec::new();
    let mut slopes = Vec::new();
    for (qi, &q) in q_grid.iter().enumerate() {
        let mut xs = vec![0.0];
        let mut ys = vec![0.0];
        for (li, &(lambda, scaled)) in inputs.scaled.iter().enumerate() {
            let ratio = (ln_moment(scaled, q) - ln_moment(base, q)).exp();
            let salt = (qi * 64 + li) as u32;
            let num = bootstrap(scaled.len(), boot, 2 * salt, |idx| {
                ln_moment(&idx.iter().map(|&i| scaled[i]).collect::<Vec<_>>(), q)
            });
            let den = bootstrap(base.len(), boot, 2 * salt + 1, |idx| {
                ln_moment(&idx.iter().map(|&i| base[i]).collect::<Vec<_>>(), q)
            });
            let r: Vec<f64> = num.iter().zip(&den).map(|(a, b)| (a - b).exp()).collect();
            let ci = if lambda == 1.0 && std::ptr::eq(scaled, base) { (1.0, 1.0) } else { percentile_interval(&r, ci_level) };
            let theory = lambda.powf(xi_bar(gamma2, alpha, d, q));
            ratios.push(MomentRatio { lambda, q, ratio, ci, theory });
            xs.push(lambda.ln());
            ys.push(ratio.ln());
        }
        let slope = if xs.len() >= 2 && xs.iter().any(|x| *x != 0.0) { ols(&xs, &ys)?.slope } else { 0.0 };
        slopes.push((q, slope, xi_bar(gamma2, alpha, d, q)));
    }

    let mut quantiles = Vec::new();
    for (li, &(lambda, scaled)) in inputs.scaled.iter().enumerate() {
        let predicted_ln: Vec<f64> = base
            .iter()
            .enumerate()
            .map(|(r, &lb)| {
                let mut rng = RngStream::new(omega_seed, r as u64, li as u32, Purpose::Omega).rng();
                let omega = sample_omega(gamma2, lambda, &mut rng);
                d as f64 / alpha * lambda.ln() + omega / alpha + lb
            })
            .collect();
        let ks = ks_two_sample(scaled, &predicted_ln)?;
        quantiles.push(QuantileComparison {
            lambda,
            probabilities: PROBABILITIES.to_vec(),
            scaled: PROBABILITIES.iter().map(|&p| quantile(scaled, p)).collect(),
            predicted: PROBABILITIES.iter().map(|&p| quantile(&predicted_ln, p)).collect(),
            ks,
        });
    }
    Ok(ScalingCheckResult {
        lambda_grid: inputs.scaled.iter().map(|s| s.0).collect(),
        q_grid: q_grid.to_vec(),
        ratios,
        slopes,
        quantiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_moments() {
        let (m, v) = omega_params(1.0, 0.5);
        assert!((m - 0.5 * 0.5f64.ln()).abs() < 1e-15);
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(omega_params(1.0, 1.0), (0.0, 0.0));
        let c = omega_mgf_self_test(1.0, 0.5, 0.25, 20_000, 3);
        assert!(c.z_score().abs() < 3.0, "{c:?}");
        assert!((c.theory - 0.5f64.powf(0.125 - 0.03125)).abs() < 1e-15);
    }

    #[test]
    fn identity_at_unit_lambda() {
        let base: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin()).collect();
        let inputs = ScalingInputs { base: &base, scaled: vec![(1.0, &base)] };
        let r = verify_perfect_scaling(&inputs, 1.0, 0.5, 1, &[0.25], 0.95, BootstrapSpec::new(50, 1), 9).unwrap();
        assert_eq!(r.ratios[0].ratio, 1.0);
        assert!(r.ratios[0].theory_inside());
        assert_eq!(r.quantiles[0].ks.statistic, 0.0);
        assert!(verify_perfect_scaling(&inputs, 1.0, 0.5, 1, &[0.5], 0.95, BootstrapSpec::new(5, 1), 9).is_err());
        let bad = ScalingInputs { base: &base, scaled: vec![(1.5, &base)] };
        assert!(verify_perfect_scaling(&bad, 1.0, 0.5, 1, &[0.25], 0.95, BootstrapSpec::new(5, 1), 9).is_err());
    }
}
