//! KPZ relation `dim_Leb = xi(dim_M) / d` and its dual form with `xi_bar`.

use crate::atomic::{alpha_from_gamma, xi_bar};
use crate::chaos::xi;
use crate::error::{invalid, Result};

fn check(dim_leb: f64, gamma2: f64, d: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&dim_leb) {
        return Err(invalid(format!("Lebesgue dimension ratio {dim_leb} outside [0, 1]")));
    }
    if !(gamma2 >= 0.0 && gamma2 < 2.0 * d as f64) {
        return Err(invalid(format!("gamma^2 = {gamma2} outside [0, 2d)")));
    }
    Ok(())
}

/// Root in `[0, hi]` of an increasing function by bisection.
fn bisect(f: impl Fn(f64) -> f64, hi: f64) -> f64 {
    let (mut a, mut b) = (0.0, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (a + b)
}

/// Unique `x` in `[0, 1]` with `xi(x) / d = dim_leb`.
///
/// Uses `x = 2 d D / (a + sqrt(a^2 - 2 gamma^2 d D))`, `a = d + gamma^2/2`,
/// which avoids cancellation for small `gamma^2`.
pub fn kpz_solve(dim_leb: f64, gamma2: f64, d: usize) -> Result<f64> {
    check(dim_leb, gamma2, d)?;
    let df = d as f64;
    let a = df + gamma2 / 2.0;
    let disc = a * a - 2.0 * gamma2 * df * dim_leb;
    if disc < 0.0 {
        return Ok(bisect(|x| xi(gamma2, d, x) / df - dim_leb, 1.0));
    }
    Ok((2.0 * df * dim_leb / (a + disc.sqrt())).min(1.0))
}

/// Unique `x` in `[0, alpha]` with `xi_bar(x) / d = dim_leb`, `alpha = gamma^2/(2d)`.
pub fn kpz_solve_dual(dim_leb: f64, gamma2: f64, d: usize) -> Result<f64> {
    check(dim_leb, gamma2, d)?;
    let alpha = alpha_from_gamma(gamma2, d)?;
    let df = d as f64;
    // xi_bar(x) = A x - B x^2
    let a = (df + gamma2 / 2.0) / alpha;
    let b = gamma2 / (2.0 * alpha * alpha);
    let disc = a * a - 4.0 * b * df * dim_leb;
    if disc < 0.0 {
        return Ok(bisect(|x| xi_bar(gamma2, alpha, d, x) / df - dim_leb, alpha));
    }
    Ok((2.0 * df * dim_leb / (a + disc.sqrt())).min(alpha))
}

/// Negative `q` where the Legendre transform of `xi_bar` along its tangent
/// reaches `-d`: `-B q^2 = -d`, i.e. `q = -alpha sqrt(2d) / gamma`.
pub fn q_minus(gamma2: f64, d: usize) -> Result<f64> {
    let alpha = alpha_from_gamma(gamma2, d)?;
    Ok(-alpha * (2.0 * d as f64).sqrt() / gamma2.sqrt())
}
