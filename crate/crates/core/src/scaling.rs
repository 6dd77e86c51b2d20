//! Psychometric scaling into JOD units.
//!
//! [`scale_mle`] maximizes the Thurstone Case V log-posterior
//!
//! ```text
//! Σ_ij counts[i][j] · ln Φ(θ·(s_i − s_j))  −  Σ_i s_i² / (2·prior_variance)
//! ```
//!
//! with θ = Φ⁻¹(0.75), so that two items 1 JOD apart are preferred 75 : 25.
//! The zero-mean Gaussian prior keeps items that win or lose every comparison
//! finite. The objective is strictly concave and is solved by damped Newton.
//!
//! [`GaussianBelief`] and [`scale_online`] are the TrueSkill-style online
//! backend used for live sessions and active sampling.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::ser::{Serialize, SerializeMap, Serializer};
use serde::Deserialize;

use crate::matrix::ComparisonMatrix;
use crate::records::ComparisonRecord;
use crate::stats::{inverse_mills, log_norm_cdf, norm_cdf, JOD_THETA};
use crate::{Error, Result};

/// Default TrueSkill performance noise: a zero-variance gap of 1 JOD maps to 75 % preference.
pub const DEFAULT_BETA: f64 = std::f64::consts::FRAC_1_SQRT_2 / JOD_THETA;

/// Default prior variance of online beliefs, in JOD².
pub const DEFAULT_INITIAL_VARIANCE: f64 = 4.0;

/// Options of the MAP scaler.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingConfig {
    /// Variance of the zero-mean score prior (JOD²).
    pub prior_variance: f64,
    /// Stop when the gradient max-norm falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            prior_variance: 100.0,
            tolerance: 1e-6,
            max_iterations: 500,
        }
    }
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.prior_variance > 0.0) || !self.prior_variance.is_finite() {
            return Err(Error::Validation("prior_variance must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Validation("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Validation("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Per-item JOD scores, anchored to zero mean.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityScale {
    items: Vec<String>,
    scores: Vec<f64>,
}

impl QualityScale {
    /// Wraps scores, re-anchoring them to zero mean.
    pub fn new(items: Vec<String>, mut scores: Vec<f64>) -> Result<Self> {
        if items.len() != scores.len() {
            return Err(Error::Validation("items and scores differ in length".into()));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Validation("non-finite score".into()));
        }
        center(&mut scores);
        Ok(Self { items, scores })
    }

    pub fn anchor(&self) -> &'static str {
        "zero-mean"
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn score(&self, item: &str) -> Option<f64> {
        self.items
            .iter()
            .position(|i| i == item)
            .map(|idx| self.scores[idx])
    }

    pub fn range(&self) -> f64 {
        let (lo, hi) = self
            .scores
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if self.scores.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

impl Serialize for QualityScale {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let scores: BTreeMap<&str, f64> = self
            .items
            .iter()
            .map(String::as_str)
            .zip(self.scores.iter().copied())
            .collect();
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("anchor", self.anchor())?;
        map.serialize_entry("scores", &scores)?;
        map.end()
    }
}

fn center(scores: &mut [f64]) {
    if scores.is_empty() {
        return;
    }
    let m = scores.iter().sum::<f64>() / scores.len() as f64;
    for s in scores.iter_mut() {
        *s -= m;
    }
}

/// Sparse design: `(winner, loser, count)` triples over `n` items.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Design {
    pub fn from_matrix(m: &ComparisonMatrix) -> Self {
        Self {
            n: m.len(),
            entries: m.entries().map(|(i, j, c)| (i, j, c as f64)).collect(),
        }
    }

    /// From a dense row-major `n×n` count table.
    pub fn from_dense(n: usize, counts: &[f64]) -> Self {
        let entries = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let c = counts[i * n + j];
                (c > 0.0).then_some((i, j, c))
            })
            .collect();
        Self { n, entries }
    }

    pub fn log_posterior(&self, s: &[f64], prior_variance: f64) -> f64 {
        let lik: f64 = self
            .entries
            .iter()
            .map(|&(i, j, c)| c * log_norm_cdf(JOD_THETA * (s[i] - s[j])))
            .sum();
        lik - s.iter().map(|x| x * x).sum::<f64>() / (2.0 * prior_variance)
    }

    pub fn gradient(&self, s: &[f64], prior_variance: f64) -> Vec<f64> {
        let mut g: Vec<f64> = s.iter().map(|x| -x / prior_variance).collect();
        for &(i, j, c) in &self.entries {
            let v = c * JOD_THETA * inverse_mills(JOD_THETA * (s[i] - s[j]));
            g[i] += v;
            g[j] -= v;
        }
        g
    }

    fn negative_hessian(&self, s: &[f64], prior_variance: f64) -> DMatrix<f64> {
        let mut h = DMatrix::from_diagonal_element(self.n, self.n, 1.0 / prior_variance);
        for &(i, j, c) in &self.entries {
            let z = JOD_THETA * (s[i] - s[j]);
            let lam = inverse_mills(z);
            // −d²/dz² ln Φ(z) = λ(λ + z) ∈ (0, 1)
            let w = c * JOD_THETA * JOD_THETA * lam * (lam + z);
            h[(i, i)] += w;
            h[(j, j)] += w;
            h[(i, j)] -= w;
            h[(j, i)] -= w;
        }
        h
    }

    /// Damped Newton ascent from the origin.
    pub fn fit(&self, config: &ScalingConfig) -> Result<Vec<f64>> {
        let pv = config.prior_variance;
        let mut s = vec![0.0; self.n];
        let mut f = self.log_posterior(&s, pv);
        let mut g = self.gradient(&s, pv);
        for _ in 0..config.max_iterations {
            if max_norm(&g) < config.tolerance {
                center(&mut s);
                return Ok(s);
            }
            let h = self.negative_hessian(&s, pv);
            let rhs = DVector::from_column_slice(&g);
            let step = match h.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                // Only reachable through round-off; fall back to a gradient step.
                None => rhs.clone() * (pv.min(1.0)),
            };
            let slope: f64 = step.iter().zip(&g).map(|(d, gi)| d * gi).sum();
            let mut t = 1.0;
            let mut next: Vec<f64>;
            let mut f_next;
            loop {
                next = s.iter().zip(step.iter()).map(|(x, d)| x + t * d).collect();
                f_next = self.log_posterior(&next, pv);
                if f_next >= f + 1e-4 * t * slope || t < 1e-10 {
                    break;
                }
                // near the optimum the objective change drops below its rounding error
                let flat = (f_next - f).abs() <= 1e-12 * f.abs().max(1.0);
                if flat && max_norm(&self.gradient(&next, pv)) < max_norm(&g) {
                    break;
                }
                t *= 0.5;
            }
            s = next;
            f = f_next;
            g = self.gradient(&s, pv);
        }
        if max_norm(&g) < config.tolerance {
            center(&mut s);
            return Ok(s);
        }
        Err(Error::NotConverged {
            iterations: config.max_iterations,
            gradient_norm: max_norm(&g),
            last_iterate: s,
        })
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// MAP Thurstone Case V scale of a connected comparison matrix.
pub fn scale_mle(matrix: &ComparisonMatrix, config: &ScalingConfig) -> Result<QualityScale> {
    config.validate()?;
    if matrix.len() < 2 {
        return Err(Error::Validation(format!(
            "scaling needs at least 2 items, got {}",
            matrix.len()
        )));
    }
    let conn = matrix.connectivity();
    if !conn.connected {
        return Err(Error::Disconnected {
            components: conn.components,
        });
    }
    let scores = Design::from_matrix(matrix).fit(config)?;
    QualityScale::new(matrix.items().to_vec(), scores)
}

/// Value of the MAP objective at `scores` (indexed like `matrix.items()`).
pub fn log_posterior(matrix: &ComparisonMatrix, scores: &[f64], prior_variance: f64) -> f64 {
    Design::from_matrix(matrix).log_posterior(scores, prior_variance)
}

/// Analytic gradient of [`log_posterior`].
pub fn log_posterior_gradient(matrix: &ComparisonMatrix, scores: &[f64], prior_variance: f64) -> Vec<f64> {
    Design::from_matrix(matrix).gradient(scores, prior_variance)
}

/// Preference probability implied by a JOD gap: Φ(gap·Φ⁻¹(0.75)).
pub fn jod_gap_to_preference(gap: f64) -> f64 {
    norm_cdf(gap * JOD_THETA)
}

/// Independent Gaussian beliefs N(μ, v) over items, in JOD units.
#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct GaussianBelief {
    items: Vec<String>,
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl GaussianBelief {
    /// Every item at μ = 0, v = `initial_variance`. Items are sorted and deduplicated.
    pub fn new<I, S>(items: I, initial_variance: f64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if !(initial_variance > 0.0) || !initial_variance.is_finite() {
            return Err(Error::Validation("initial variance must be positive".into()));
        }
        let mut items: Vec<String> = items.into_iter().map(Into::into).collect();
        items.sort();
        items.dedup();
        let n = items.len();
        Ok(Self {
            items,
            mean: vec![0.0; n],
            variance: vec![initial_variance; n],
        })
    }

    /// Beliefs from explicit parts, in the given item order.
    pub fn from_parts(items: Vec<String>, mean: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        if items.len() != mean.len() || items.len() != variance.len() {
            return Err(Error::Validation("belief vectors differ in length".into()));
        }
        if variance.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Validation("variances must be non-negative".into()));
        }
        Ok(Self {
            items,
            mean,
            variance,
        })
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    pub fn variances(&self) -> &[f64] {
        &self.variance
    }

    pub fn index_of(&self, item: &str) -> Result<usize> {
        self.items
            .iter()
            .position(|i| i == item)
            .ok_or_else(|| Error::UnknownItem(item.to_string()))
    }

    /// One-match Gaussian update after `winner` beat `loser`.
    pub fn update(&mut self, winner: &str, loser: &str, beta: f64) -> Result<()> {
        let w = self.index_of(winner)?;
        let l = self.index_of(loser)?;
        if w == l {
            return Err(Error::Validation(format!("self-comparison of `{winner}`")));
        }
        self.update_indices(w, l, beta);
        Ok(())
    }

    pub(crate) fn update_indices(&mut self, w: usize, l: usize, beta: f64) {
        let (mw, ml, vw, vl) = trueskill_step(self.mean[w], self.variance[w], self.mean[l], self.variance[l], beta);
        self.mean[w] = mw;
        self.mean[l] = ml;
        self.variance[w] = vw;
        self.variance[l] = vl;
    }

    /// Probability that item `i` beats item `j` under the current beliefs.
    pub(crate) fn win_probability(&self, i: usize, j: usize, beta: f64) -> f64 {
        let c = (2.0 * beta * beta + self.variance[i] + self.variance[j]).sqrt();
        norm_cdf((self.mean[i] - self.mean[j]) / c)
    }
}

/// Returns updated `(μ_w, μ_l, v_w, v_l)`.
pub(crate) fn trueskill_step(mw: f64, vw: f64, ml: f64, vl: f64, beta: f64) -> (f64, f64, f64, f64) {
    let c2 = 2.0 * beta * beta + vw + vl;
    let c = c2.sqrt();
    let t = (mw - ml) / c;
    let v = inverse_mills(t);
    let w = v * (v + t);
    (
        mw + vw / c * v,
        ml - vl / c * v,
        (vw * (1.0 - vw / c2 * w)).max(f64::MIN_POSITIVE.min(vw)),
        (vl * (1.0 - vl / c2 * w)).max(f64::MIN_POSITIVE.min(vl)),
    )
}

/// Pure form of [`GaussianBelief::update`].
pub fn trueskill_update(beliefs: &GaussianBelief, winner: &str, loser: &str, beta: f64) -> Result<GaussianBelief> {
    let mut next = beliefs.clone();
    next.update(winner, loser, beta)?;
    Ok(next)
}

/// Folds [`trueskill_update`] over `records` in order, from μ = 0, v = `initial_variance`.
pub fn scale_online(records: &[ComparisonRecord], initial_variance: f64, beta: f64) -> Result<GaussianBelief> {
    let items = records.iter().flat_map(|r| [r.item_a.clone(), r.item_b.clone()]);
    let mut beliefs = GaussianBelief::new(items, initial_variance)?;
    for r in records {
        beliefs.update(&r.winner, r.loser(), beta)?;
    }
    Ok(beliefs)
}
