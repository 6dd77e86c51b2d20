//! One-way repeated-measures ANOVA with bootstrap replicates as subjects.

use serde::{Deserialize, Serialize};

use crate::stats::f_survival;
use crate::{Error, Result};

/// Outcome of testing H₀: all condition means are equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    #[serde(rename = "accept_H0")]
    AcceptH0,
    #[serde(rename = "reject_H0")]
    RejectH0,
}

impl Decision {
    pub fn from_p(p_value: f64, alpha: f64) -> Self {
        if p_value < alpha {
            Decision::RejectH0
        } else {
            Decision::AcceptH0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f_statistic: f64,
    pub p_value: f64,
    pub df_conditions: usize,
    pub df_error: usize,
    pub decision: Decision,
}

/// Sums of squares of the repeated-measures decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumsOfSquares {
    pub conditions: f64,
    pub subjects: f64,
    pub error: f64,
    pub total: f64,
}

/// Decomposes a `subjects × conditions` table (rows are subjects).
pub fn sums_of_squares(rows: &[Vec<f64>]) -> SumsOfSquares {
    let b = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    let grand = rows.iter().flatten().sum::<f64>() / (b * k) as f64;
    let cond_means: Vec<f64> = (0..k)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / b as f64)
        .collect();
    let subj_means: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / k as f64).collect();
    let conditions = b as f64 * cond_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let subjects = k as f64 * subj_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let total = rows.iter().flatten().map(|x| (x - grand).powi(2)).sum::<f64>();
    SumsOfSquares {
        conditions,
        subjects,
        error: (total - conditions - subjects).max(0.0),
        total,
    }
}

/// Repeated-measures ANOVA on a `b × n_g` table; needs `n_g ≥ 3` conditions and `b ≥ 2` subjects.
pub fn rmanova(rows: &[Vec<f64>], alpha: f64) -> Result<AnovaResult> {
    let b = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if k < 3 {
        return Err(Error::Validation(format!(
            "repeated-measures ANOVA needs at least 3 conditions, got {k}"
        )));
    }
    if b < 2 {
        return Err(Error::Validation(format!(
            "repeated-measures ANOVA needs at least 2 subjects, got {b}"
        )));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::Validation("ragged ANOVA table".into()));
    }
    let ss = sums_of_squares(rows);
    let df_conditions = k - 1;
    let df_error = (k - 1) * (b - 1);
    // Relative zero thresholds absorb round-off in the grand mean.
    let scale = ss.total.max(f64::MIN_POSITIVE);
    let (f_statistic, p_value) = if ss.conditions <= 1e-15 * scale {
        (0.0, 1.0)
    } else if ss.error <= 1e-15 * scale {
        (f64::INFINITY, 0.0)
    } else {
        let f = (ss.conditions / df_conditions as f64) / (ss.error / df_error as f64);
        (f, f_survival(f, df_conditions as f64, df_error as f64))
    };
    Ok(AnovaResult {
        f_statistic,
        p_value,
        df_conditions,
        df_error,
        decision: Decision::from_p(p_value, alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn identical_columns_accept() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64; 4]).collect();
        let r = rmanova(&rows, 0.05).unwrap();
        assert_eq!(r.f_statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.decision, Decision::AcceptH0);
    }

    /// Textbook route: SS_err as the sum of squared interaction residuals
    /// x_ij − m̄_i − m̄_j + m, independent of the subtraction used in the implementation.
    fn residual_route(rows: &[Vec<f64>]) -> (f64, f64) {
        let b = rows.len() as f64;
        let k = rows[0].len();
        let m: f64 = rows.iter().flatten().sum::<f64>() / (b * k as f64);
        let col: Vec<f64> = (0..k).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / b).collect();
        let mut ss_cond = 0.0;
        for c in &col {
            ss_cond += b * (c - m) * (c - m);
        }
        let mut ss_err = 0.0;
        for r in rows {
            let rm = r.iter().sum::<f64>() / k as f64;
            for j in 0..k {
                let e = r[j] - rm - col[j] + m;
                ss_err += e * e;
            }
        }
        let df1 = (k - 1) as f64;
        let df2 = df1 * (b - 1.0);
        (ss_cond / df1 / (ss_err / df2), df2)
    }

    #[test]
    fn small_table_matches_textbook_formula() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![1.1, 2.2, 2.9], vec![0.9, 1.9, 3.1]];
        let r = rmanova(&rows, 0.05).unwrap();
        let (f, df2) = residual_route(&rows);
        // two numerator degrees of freedom: P(F ≥ f) = (df2 / (df2 + 2f))^(df2/2)
        let p = (df2 / (df2 + 2.0 * f)).powf(df2 / 2.0);
        assert!((r.f_statistic - f).abs() < 1e-8 * f, "{} vs {f}", r.f_statistic);
        assert!((r.p_value - p).abs() < 1e-8, "{} vs {p}", r.p_value);
        // frozen reference (scipy.stats.f.sf)
        assert!((r.f_statistic - 168.812_499_999_999_72).abs() < 1e-8);
        assert!((r.p_value - 1.370_947_087_467_098_3e-4).abs() < 1e-8);
        assert_eq!((r.df_conditions, r.df_error), (2, 4));
        assert_eq!(r.decision, Decision::RejectH0);
    }

    #[test]
    fn separated_column_rejects() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![noise.sample(&mut rng), noise.sample(&mut rng), 5.0 + noise.sample(&mut rng)])
            .collect();
        assert_eq!(rmanova(&rows, 0.05).unwrap().decision, Decision::RejectH0);
    }

    #[test]
    fn zero_error_with_effect_gives_zero_p() {
        let rows = vec![vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]];
        let r = rmanova(&rows, 0.05).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert_eq!(r.decision, Decision::RejectH0);
    }

    #[test]
    fn too_few_conditions_or_subjects() {
        assert!(rmanova(&[vec![1.0, 2.0], vec![2.0, 3.0]], 0.05).is_err());
        assert!(rmanova(&[vec![1.0, 2.0, 3.0]], 0.05).is_err());
    }

    #[test]
    fn shift_invariance() {
        let rows = vec![vec![0.3, -1.2, 2.0, 0.1], vec![0.5, -0.7, 1.1, 0.0], vec![0.1, -1.0, 1.7, 0.4]];
        let shifted: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x + 123.25).collect()).collect();
        let a = rmanova(&rows, 0.05).unwrap();
        let b = rmanova(&shifted, 0.05).unwrap();
        assert!((a.f_statistic - b.f_statistic).abs() < 1e-9 * a.f_statistic.max(1.0));
    }
}
