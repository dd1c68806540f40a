//! Special functions and truncated-Gaussian calculus.
//!
//! Everything probability-related bottoms out in the regularized lower
//! incomplete gamma function `P(a, z)`. The chi-squared CDF is
//! `F_k(x) = P(k/2, x/2)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

const MAX_ITER: usize = 5000;
const EPS: f64 = 1e-17;
const TINY: f64 = 1e-300;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn check_args(a: f64, z: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Argument(format!(
            "shape a must be positive and finite, got {a}"
        )));
    }
    if !(z >= 0.0) {
        return Err(Error::Argument(format!("z must be non-negative, got {z}")));
    }
    Ok(())
}

/// `S(a, z) = Σ_{n≥0} z^n / ((a+1)(a+2)…(a+n))`, so that
/// `P(a, z) = e^{-z} z^a / Γ(a+1) · S(a, z)`.
fn lower_series(a: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= z / ap;
        sum += term;
        if term < sum * EPS {
            return Ok(sum);
        }
    }
    Err(Error::Convergence(format!("gamma series a={a}, z={z}")))
}

/// Modified Lentz evaluation of the continued fraction for `Γ(a, z) e^{z} z^{-a}`.
fn upper_continued_fraction(a: f64, z: f64) -> Result<f64> {
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / if b.abs() < TINY { TINY } else { b };
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::Convergence(format!(
        "gamma continued fraction a={a}, z={z}"
    )))
}

/// `(P(a, z), Q(a, z))`, switching from series to continued fraction at `z = a + 1`.
fn gamma_pq(a: f64, z: f64) -> Result<(f64, f64)> {
    check_args(a, z)?;
    if z == 0.0 {
        return Ok((0.0, 1.0));
    }
    if z.is_infinite() {
        return Ok((1.0, 0.0));
    }
    if z < a + 1.0 {
        let log_pref = -z + a * z.ln() - ln_gamma(a + 1.0);
        let p = (log_pref.exp() * lower_series(a, z)?).min(1.0);
        Ok((p, 1.0 - p))
    } else {
        let log_pref = -z + a * z.ln() - ln_gamma(a);
        let q = (log_pref.exp() * upper_continued_fraction(a, z)?).min(1.0);
        Ok((1.0 - q, q))
    }
}

/// Regularized lower incomplete gamma function `P(a, z) = γ(a, z) / Γ(a)`.
pub fn regularized_gamma_p(a: f64, z: f64) -> Result<f64> {
    gamma_pq(a, z).map(|(p, _)| p)
}

/// Upper complement `Q(a, z) = 1 - P(a, z)`, accurate in the tail.
pub fn regularized_gamma_q(a: f64, z: f64) -> Result<f64> {
    gamma_pq(a, z).map(|(_, q)| q)
}

/// The constant `α_a` of the lower bound `(1 - e^{-α_a z})^a ≤ P(a, z)`:
/// 1 for `a ≤ 1`, `Γ(1+a)^{-1/a}` above.
pub fn gamma_lower_alpha(a: f64) -> f64 {
    if a <= 1.0 {
        1.0
    } else {
        (-ln_gamma(1.0 + a) / a).exp()
    }
}

/// `(1 - e^{-α_a z})^a`, a closed-form lower bound on `P(a, z)`; exact at `a = 1`.
pub fn regularized_gamma_lower(a: f64, z: f64) -> Result<f64> {
    check_args(a, z)?;
    let x = -(-gamma_lower_alpha(a) * z).exp_m1();
    Ok(x.powf(a))
}

/// Chi-squared CDF with `k` degrees of freedom.
pub fn chi2_cdf(k: f64, x: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::Argument(format!(
            "degrees of freedom must be positive, got {k}"
        )));
    }
    regularized_gamma_p(0.5 * k, 0.5 * x.max(0.0))
}

/// `F_{d+2}(x) / F_d(x)` without cancellation for small `x`.
pub fn chi2_cdf_ratio(d: usize, x: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Argument("dimension must be at least 1".into()));
    }
    if !(x > 0.0) {
        return Err(Error::Argument(format!("x must be positive, got {x}")));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let a = 0.5 * d as f64;
    let z = 0.5 * x;
    if z < a + 1.0 {
        let s_hi = lower_series(a + 1.0, z)?;
        let s_lo = lower_series(a, z)?;
        Ok((z / (a + 1.0) * s_hi / s_lo).min(1.0))
    } else {
        Ok((regularized_gamma_p(a + 1.0, z)? / regularized_gamma_p(a, z)?).min(1.0))
    }
}

fn trace_of_product(a: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut t = 0.0;
    for i in 0..n {
        for j in 0..n {
            t += a[(i, j)] * m[(j, i)];
        }
    }
    t
}

/// `E[xᵀAx | x ∈ 𝓔(r)]` for `x ~ N(0, M)` truncated to `{xᵀM⁻¹x ≤ r²}`:
/// `F_{d+2}(r²)/F_d(r²) · tr(AM)`.
pub fn truncated_quadratic_moment(a: &DMatrix<f64>, m: &DMatrix<f64>, r: f64) -> Result<f64> {
    linalg::check_psd(a, "A")?;
    linalg::check_pd(m, "M")?;
    if a.nrows() != m.nrows() {
        return Err(Error::Argument(format!(
            "dimension mismatch: A is {0}x{0}, M is {1}x{1}",
            a.nrows(),
            m.nrows()
        )));
    }
    if !(r > 0.0) {
        return Err(Error::Argument(format!("radius must be positive, got {r}")));
    }
    let ratio = chi2_cdf_ratio(a.nrows(), r * r)?;
    Ok(ratio * trace_of_product(a, m))
}

/// `∫_{‖u‖_A ≤ r} e^{-γ‖u‖²_A / 2} du = (2π/γ)^{d/2} P(d/2, r²γ/2) / √det(A)`;
/// the Euclidean ball when `metric` is `None`.
pub fn gaussian_region_integral(
    gamma: f64,
    r: f64,
    d: usize,
    metric: Option<&DMatrix<f64>>,
) -> Result<f64> {
    if !(gamma > 0.0) || !(r > 0.0) || d == 0 {
        return Err(Error::Argument(format!(
            "need gamma > 0, r > 0, d >= 1 (got gamma={gamma}, r={r}, d={d})"
        )));
    }
    let half_log_det = match metric {
        None => 0.0,
        Some(a) => {
            if a.nrows() != d {
                return Err(Error::Argument(format!("metric must be {d}x{d}")));
            }
            linalg::check_symmetric(a, "metric")?;
            0.5 * linalg::log_det_pd(a)
                .map_err(|_| Error::Argument("metric is singular or indefinite".into()))?
        }
    };
    let a = 0.5 * d as f64;
    let p = regularized_gamma_p(a, 0.5 * r * r * gamma)?;
    Ok((a * (2.0 * PI / gamma).ln() - half_log_det).exp() * p)
}
