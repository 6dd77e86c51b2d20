//! Paired two-sided Student t-test.

use serde::{Deserialize, Serialize};

use crate::stats::{mean, sample_variance, student_t_two_sided};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p_value: f64,
    pub df: usize,
}

/// Paired t-test of `a − b` against zero mean.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let m = a.len();
    if m < 2 {
        return Err(Error::Validation("a paired t-test needs at least 2 pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let md = mean(&d);
    let sd = sample_variance(&d).sqrt();
    let spread = d.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let df = m - 1;
    if sd <= 1e-13 * spread || spread == 0.0 {
        return Ok(if md.abs() <= 1e-13 * spread || spread == 0.0 {
            TTest { t: 0.0, p_value: 1.0, df }
        } else {
            TTest {
                t: f64::INFINITY.copysign(md),
                p_value: 0.0,
                df,
            }
        });
    }
    let t = md * (m as f64).sqrt() / sd;
    Ok(TTest {
        t,
        p_value: student_t_two_sided(t, df as f64),
        df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn identical_samples() {
        let a = [0.3, 1.2, -0.4];
        let r = paired_ttest(&a, &a).unwrap();
        assert_eq!((r.t, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn hand_computed_example() {
        let b = [1.0, 2.0, 3.0, 4.0];
        let a = [1.2, 2.1, 3.3, 4.2];
        let r = paired_ttest(&a, &b).unwrap();
        // mean 0.2, sd 0.0816497, t = 0.2 / 0.0816497 · 2
        let t = 0.2 / (0.02f64 / 3.0).sqrt() * 2.0;
        assert!((r.t - t).abs() < 1e-8, "{}", r.t);
        // three degrees of freedom: P(|T| ≥ t) = 1 − (2/π)(θ + sin θ cos θ), θ = atan(t/√3)
        let th = (t / 3f64.sqrt()).atan();
        let p = 1.0 - 2.0 / PI * (th + th.sin() * th.cos());
        assert!((r.p_value - p).abs() < 1e-8, "{} vs {p}", r.p_value);
        assert!((r.p_value - 0.016_276_603_459_428_55).abs() < 1e-8);
    }

    #[test]
    fn swap_negates_t() {
        let a = [0.5, 0.1, 0.9, 0.4, 0.7];
        let b = [0.2, 0.3, 0.1, 0.5, 0.2];
        let ab = paired_ttest(&a, &b).unwrap();
        let ba = paired_ttest(&b, &a).unwrap();
        assert_eq!(ab.t, -ba.t);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn constant_nonzero_difference() {
        let r = paired_ttest(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn length_checks() {
        assert!(paired_ttest(&[1.0], &[1.0]).is_err());
        assert!(paired_ttest(&[1.0, 2.0], &[1.0]).is_err());
    }
}
