//! Paired two-tailed t-test over per-query metric values.
//!
//! The statistic is `t = mean(d) / (sd(d) / sqrt(n))` with the sample
//! standard deviation (n - 1 denominator). Its two-tailed p-value under
//! the Student t distribution with `df = n - 1` degrees of freedom is
//!
//! ```text
//! p = I_x(df/2, 1/2)   with   x = df / (df + t^2)
//! ```
//!
//! where `I` is the regularized incomplete beta function, evaluated here
//! with the classical Lentz continued fraction and a Lanczos log-gamma.
//! When every pairwise difference is identical the variance is zero and
//! the statistic degenerates; that case is reported explicitly instead of
//! dividing by zero.

use std::f64::consts::PI;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub mean_diff: f64,
    /// p < 0.05, the customary two-tailed threshold.
    pub significant: bool,
    /// True when the differences have zero sample variance. Then `p` is 1
    /// if the mean difference is also zero, else 0 with an infinite `t`.
    pub degenerate_variance: bool,
}

/// Paired t-test of `a` against `b` (positive `t` means `a` is larger).
/// The slices pair by position and need at least two entries.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "paired t-test needs at least 2 pairs, got {n}"
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n_f = n as f64;
    let mean = diffs.iter().sum::<f64>() / n_f;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n_f - 1.0);
    let sd = var.sqrt();
    let df = n_f - 1.0;

    if sd == 0.0 {
        let (t, p) = if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        };
        return Ok(TTestResult {
            t,
            df,
            p,
            mean_diff: mean,
            significant: p < 0.05,
            degenerate_variance: true,
        });
    }

    let t = mean / (sd / n_f.sqrt());
    let p = two_tailed_p(t, df);
    Ok(TTestResult {
        t,
        df,
        p,
        mean_diff: mean,
        significant: p < 0.05,
        degenerate_variance: false,
    })
}

/// Two-tailed p-value of a t statistic under Student's t with `df`
/// degrees of freedom.
pub fn two_tailed_p(t: f64, df: f64) -> f64 {
    reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))
}

/// Regularized incomplete beta function I_x(a, b) for a, b > 0.
fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // the continued fraction converges fast only below this pivot; above
    // it, evaluate the mirrored tail instead
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

/// Continued fraction for the incomplete beta (Lentz's method). The odd
/// and even coefficients are
///
/// ```text
/// d_{2m+1} = -(a+m)(a+b+m)x / ((a+2m)(a+2m+1))
/// d_{2m}   =       m(b-m)x / ((a+2m-1)(a+2m))
/// ```
fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-16;
    const TINY: f64 = 1e-300;

    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - (a + b) * x / (a + 1.0));
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m_f = m as f64;
        let m2 = 2.0 * m_f;

        let even = m_f * (b - m_f) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 / clamp(1.0 + even * d);
        c = clamp(1.0 + even / c);
        h *= d * c;

        let odd = -(a + m_f) * (a + b + m_f) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 / clamp(1.0 + odd * d);
        c = clamp(1.0 + odd / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Lanczos approximation (g = 7, 9 terms) of ln Gamma(x) for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection keeps the series in its accurate range
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.999_999_999_999_809_9;
    for (i, &c) in COEF.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
