//! Paired two-sided t-tests and Bonferroni correction.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SigResult {
    /// Absent when the result was built from a bare p-value.
    pub t_statistic: Option<f64>,
    pub p_value: f64,
    pub adjusted_alpha: f64,
    /// Number of comparisons the alpha was divided by.
    pub family_size: usize,
    pub significant: bool,
}

impl SigResult {
    fn new(t_statistic: Option<f64>, p_value: f64, alpha: f64, family_size: usize) -> Self {
        let adjusted_alpha = alpha / family_size as f64;
        SigResult {
            t_statistic,
            p_value,
            adjusted_alpha,
            family_size,
            significant: p_value < adjusted_alpha,
        }
    }

    /// Re-evaluates significance against `alpha / family_size`.
    pub fn corrected(self, alpha: f64, family_size: usize) -> Self {
        SigResult::new(self.t_statistic, self.p_value, alpha, family_size.max(1))
    }
}

/// Lanczos approximation (g = 7, n = 9).
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
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
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided p-value of Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    incomplete_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Two-sided paired t-test on `a[i] - b[i]` with `n - 1` degrees of freedom.
/// When every difference is zero the test is degenerate and reports p = 1.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<SigResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "paired t-test needs at least 2 pairs".into(),
        ));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let (t, p) = if var == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = mean / (var.sqrt() / (n as f64).sqrt());
        (t, student_t_two_sided(t, (n - 1) as f64))
    };
    Ok(SigResult::new(Some(t), p, DEFAULT_ALPHA, 1))
}

/// Significance of each p-value at `alpha / m`.
pub fn bonferroni(p_values: &[f64], alpha: f64) -> Result<Vec<SigResult>> {
    if p_values.is_empty() {
        return Err(Error::InvalidArgument(
            "bonferroni needs at least one p-value".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    let m = p_values.len();
    Ok(p_values
        .iter()
        .map(|&p| SigResult::new(None, p, alpha, m))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form two-sided p for df = 3.
    fn p_df3(t: f64) -> f64 {
        let theta = (t.abs() / 3f64.sqrt()).atan();
        let cdf = 0.5 + (theta + theta.sin() * theta.cos()) / std::f64::consts::PI;
        2.0 * (1.0 - cdf)
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn t_cdf_matches_df3_closed_form() {
        for &t in &[0.0, 0.3, 1.0, 2.2, 3.873, 10.0] {
            assert!(
                (student_t_two_sided(t, 3.0) - p_df3(t)).abs() < 1e-10,
                "t = {t}"
            );
        }
    }

    #[test]
    fn t_cdf_df1_is_cauchy() {
        for &t in &[0.5f64, 1.0, 4.0] {
            let p = 1.0 - 2.0 * t.atan() / std::f64::consts::PI;
            assert!((student_t_two_sided(t, 1.0) - p).abs() < 1e-10);
        }
    }

    #[test]
    fn identical_samples() {
        let a = [0.1, 0.5, 0.9];
        let r = paired_t_test(&a, &a).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(!r.significant);
    }

    #[test]
    fn alternating_differences() {
        let a = [1.0, -1.0, 1.0, -1.0];
        let r = paired_t_test(&a, &[0.0; 4]).unwrap();
        assert_eq!(r.t_statistic, Some(0.0));
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_to_four() {
        let r = paired_t_test(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]).unwrap();
        let t = r.t_statistic.unwrap();
        // mean 2.5, sd sqrt(5/3)
        let expected_t = 2.5 / ((5.0f64 / 3.0).sqrt() / 2.0);
        assert!((t - expected_t).abs() < 1e-12);
        assert!((t - 3.873).abs() < 1e-3);
        assert!((r.p_value - p_df3(expected_t)).abs() < 1e-10);
        assert!((r.p_value - 0.0305).abs() < 1e-3);
    }

    #[test]
    fn t_test_errors() {
        assert!(paired_t_test(&[1.0], &[0.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn bonferroni_examples() {
        let one = bonferroni(&[0.04], 0.05).unwrap();
        assert_eq!(one[0].adjusted_alpha, 0.05);
        assert!(one[0].significant);
        let three = bonferroni(&[0.02, 0.01, 0.5], 0.05).unwrap();
        assert!((three[0].adjusted_alpha - 0.016667).abs() < 1e-6);
        assert!(!three[0].significant);
        assert!(three[1].significant);
        assert!(bonferroni(&[], 0.05).is_err());
        assert!(bonferroni(&[0.1], 1.0).is_err());
    }
}
