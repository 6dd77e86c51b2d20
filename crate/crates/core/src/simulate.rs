//! Synthetic forced-choice experiments with Thurstone observers, plus rank
//! correlation utilities for checking recovered scales against the truth.
//!
//! Observer `o` perceives item `i` at `μᵢ + bᵢᵒ` with `bᵢᵒ ~ N(0, inter)`;
//! a trial on `(i, j)` picks `i` with probability
//! `Φ(Δ·θ / √(1 + 2·intra·θ²))`, where `Δ` is the perceived gap.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::active::{next_pair, ActiveConfig, PairHistory};
use crate::bootstrap::{bootstrap_ensemble, confidence_intervals, median_ci_size, BootstrapConfig, ConfidenceIntervals};
use crate::matrix::ObserverPartition;
use crate::records::ComparisonRecord;
use crate::scaling::{scale_mle, GaussianBelief, QualityScale, ScalingConfig, DEFAULT_INITIAL_VARIANCE};
use crate::seed::{labeled_seed, rng, sub_seed};
use crate::stats::{norm_cdf, JOD_THETA};
use crate::{Error, Result};

pub const STUDY_ID: &str = "sim";
pub const CONDITION: &str = "overall";

/// True item qualities and observer noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub items: Vec<String>,
    pub quality: Vec<f64>,
    pub inter_variance: f64,
    pub intra_variance: f64,
}

fn item_names(n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len().max(2);
    (0..n).map(|i| format!("i{i:0width$}")).collect()
}

impl GroundTruth {
    pub fn new(items: Vec<String>, quality: Vec<f64>, inter_variance: f64, intra_variance: f64) -> Result<Self> {
        let truth = GroundTruth {
            items,
            quality,
            inter_variance,
            intra_variance,
        };
        truth.validate()?;
        Ok(truth)
    }

    pub fn validate(&self) -> Result<()> {
        if self.items.len() < 2 {
            return Err(Error::Validation("ground truth needs at least 2 items".into()));
        }
        if self.items.len() != self.quality.len() {
            return Err(Error::Validation("items and qualities differ in length".into()));
        }
        let mut sorted = self.items.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.items.len() {
            return Err(Error::Validation("duplicate item identifiers".into()));
        }
        if self.quality.iter().any(|q| !q.is_finite()) {
            return Err(Error::Validation("qualities must be finite".into()));
        }
        for v in [self.inter_variance, self.intra_variance] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("variance must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// `n` items evenly spaced from `-span/2` to `span/2`.
    pub fn uniform_grid(n: usize, span: f64, inter_variance: f64, intra_variance: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation("ground truth needs at least 2 items".into()));
        }
        let quality = (0..n).map(|i| -span / 2.0 + span * i as f64 / (n - 1) as f64).collect();
        Self::new(item_names(n), quality, inter_variance, intra_variance)
    }

    /// `per_level` items at each of `levels`, level by level.
    pub fn planted_levels(levels: &[f64], per_level: usize, inter_variance: f64, intra_variance: f64) -> Result<Self> {
        let quality: Vec<f64> = levels.iter().flat_map(|&l| std::iter::repeat_n(l, per_level)).collect();
        Self::new(item_names(quality.len()), quality, inter_variance, intra_variance)
    }

    /// `n_cluster` items spread evenly over `[-spread/2, spread/2]` and one
    /// outlier at `outlier`.
    pub fn clustered_with_outlier(
        n_cluster: usize,
        spread: f64,
        outlier: f64,
        inter_variance: f64,
        intra_variance: f64,
    ) -> Result<Self> {
        let mut quality: Vec<f64> = match n_cluster {
            0 => Vec::new(),
            1 => vec![0.0],
            _ => (0..n_cluster)
                .map(|i| -spread / 2.0 + spread * i as f64 / (n_cluster - 1) as f64)
                .collect(),
        };
        quality.push(outlier);
        Self::new(item_names(quality.len()), quality, inter_variance, intra_variance)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Qualities shifted to zero mean.
    pub fn anchored(&self) -> Vec<f64> {
        let m = self.quality.iter().sum::<f64>() / self.quality.len() as f64;
        self.quality.iter().map(|q| q - m).collect()
    }

    /// The same truth with every gap multiplied by `factor`.
    pub fn with_gaps_scaled(&self, factor: f64) -> Self {
        let m = self.quality.iter().sum::<f64>() / self.quality.len() as f64;
        GroundTruth {
            quality: self.quality.iter().map(|q| m + (q - m) * factor).collect(),
            ..self.clone()
        }
    }

    /// Truth values in sorted item order, matching matrix and scale indexing.
    pub fn sorted_anchored(&self) -> (Vec<String>, Vec<f64>) {
        let anchored = self.anchored();
        let mut pairs: Vec<(String, f64)> = self.items.iter().cloned().zip(anchored).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        pairs.into_iter().unzip()
    }

    /// P(observer picks `i` over `j`) given perceived qualities.
    pub fn choice_probability(&self, perceived_i: f64, perceived_j: f64) -> f64 {
        let scale = (1.0 + 2.0 * self.intra_variance * JOD_THETA * JOD_THETA).sqrt();
        norm_cdf((perceived_i - perceived_j) * JOD_THETA / scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairStrategy {
    Random,
    RoundRobin,
    Active,
}

impl std::str::FromStr for PairStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PairStrategy::Random),
            "round-robin" | "round_robin" => Ok(PairStrategy::RoundRobin),
            "active" => Ok(PairStrategy::Active),
            other => Err(Error::Validation(format!("unknown pair strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_observers: usize,
    pub comparisons_per_observer: usize,
    pub pair_strategy: PairStrategy,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_observers == 0 {
            return Err(Error::Validation("n_observers must be positive".into()));
        }
        if self.comparisons_per_observer == 0 {
            return Err(Error::Validation("comparisons_per_observer must be positive".into()));
        }
        Ok(())
    }

    pub fn total_comparisons(&self) -> usize {
        self.n_observers * self.comparisons_per_observer
    }
}

/// Shared state of the pair schedule across observers.
enum Scheduler {
    Random,
    RoundRobin { next: usize, pairs: Vec<(usize, usize)> },
    Active { beliefs: GaussianBelief, history: PairHistory, config: ActiveConfig, seed: u64, step: u64 },
}

impl Scheduler {
    fn new(strategy: PairStrategy, truth: &GroundTruth, seed: u64) -> Result<Self> {
        let n = truth.len();
        Ok(match strategy {
            PairStrategy::Random => Scheduler::Random,
            PairStrategy::RoundRobin => Scheduler::RoundRobin {
                next: 0,
                pairs: (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
            },
            PairStrategy::Active => Scheduler::Active {
                beliefs: GaussianBelief::from_parts(
                    truth.items.clone(),
                    vec![0.0; n],
                    vec![DEFAULT_INITIAL_VARIANCE; n],
                )?,
                history: PairHistory::new(),
                config: ActiveConfig::default(),
                seed: labeled_seed(seed, "active"),
                step: 0,
            },
        })
    }

    fn pick(&mut self, n: usize, rng: &mut crate::seed::Rng) -> Result<(usize, usize)> {
        match self {
            Scheduler::Random => {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                Ok((i.min(j), i.max(j)))
            }
            Scheduler::RoundRobin { next, pairs } => {
                let p = pairs[*next % pairs.len()];
                *next += 1;
                Ok(p)
            }
            Scheduler::Active {
                beliefs,
                history,
                config,
                seed,
                step,
            } => {
                let pick = next_pair(beliefs, history, sub_seed(*seed, *step), config)?;
                *step += 1;
                Ok((beliefs.index_of(&pick.item_i)?, beliefs.index_of(&pick.item_j)?))
            }
        }
    }

    fn observe(&mut self, winner: usize, loser: usize, truth: &GroundTruth) {
        if let Scheduler::Active {
            beliefs,
            history,
            config,
            ..
        } = self
        {
            beliefs.update_indices(winner, loser, config.beta);
            history.record(&truth.items[winner], &truth.items[loser]);
        }
    }
}

/// Simulates all observers in order; fully determined by `config.seed`.
pub fn simulate_experiment(truth: &GroundTruth, config: &SimulationConfig) -> Result<Vec<ComparisonRecord>> {
    truth.validate()?;
    config.validate()?;
    let n = truth.len();
    let width = config.n_observers.saturating_sub(1).to_string().len().max(3);
    let bias = Normal::new(0.0, truth.inter_variance.sqrt()).expect("finite non-negative sd");
    let mut scheduler = Scheduler::new(config.pair_strategy, truth, config.seed)?;
    let mut records = Vec::with_capacity(config.total_comparisons());
    let observer_seed = labeled_seed(config.seed, "observer");
    for o in 0..config.n_observers {
        let observer = format!("o{o:0width$}");
        let mut rng = rng(sub_seed(observer_seed, o as u64));
        let perceived: Vec<f64> = truth.quality.iter().map(|q| q + bias.sample(&mut rng)).collect();
        for _ in 0..config.comparisons_per_observer {
            let (i, j) = scheduler.pick(n, &mut rng)?;
            let p = truth.choice_probability(perceived[i], perceived[j]);
            let (winner, loser) = if rng.random::<f64>() < p { (i, j) } else { (j, i) };
            scheduler.observe(winner, loser, truth);
            records.push(ComparisonRecord {
                study_id: STUDY_ID.to_string(),
                condition: CONDITION.to_string(),
                observer_id: observer.clone(),
                item_a: truth.items[i].clone(),
                item_b: truth.items[j].clone(),
                winner: truth.items[winner].clone(),
                timestamp: None,
            });
        }
    }
    Ok(records)
}

/// Ranks starting at 1; tied values share their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation.
pub fn srcc(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!("srcc inputs differ in length ({} vs {})", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::Validation("srcc needs at least 2 values".into()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::Validation("srcc inputs must be finite".into()));
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let m = (a.len() + 1) as f64 / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - m) * (y - m);
        saa += (x - m) * (x - m);
        sbb += (y - m) * (y - m);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Validation("srcc undefined for constant input".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Mean of per-scene SRCC values between predictions and targets.
pub fn mean_scene_correlation(per_scene: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    if per_scene.is_empty() {
        return Err(Error::Validation("no scenes".into()));
    }
    let mut total = 0.0;
    for (index, (predictions, targets)) in per_scene.iter().enumerate() {
        total += srcc(predictions, targets).map_err(|e| Error::Scene {
            index,
            source: Box::new(e),
        })?;
    }
    Ok(total / per_scene.len() as f64)
}

/// Settings for evaluating a simulated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub replicates: usize,
    pub level: f64,
    pub scaling: ScalingConfig,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            replicates: 200,
            level: 0.95,
            scaling: ScalingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentMetrics {
    pub srcc: f64,
    pub median_ci: f64,
    /// Fraction of items whose anchored truth lies inside its interval.
    pub coverage: f64,
}

/// Scales and bootstraps `records`, scoring them against `truth`.
pub fn evaluate_experiment(
    truth: &GroundTruth,
    records: &[ComparisonRecord],
    config: &EvaluationConfig,
    seed: u64,
) -> Result<(QualityScale, ConfidenceIntervals, ExperimentMetrics)> {
    let partition = ObserverPartition::from_records(records)?;
    let scale = scale_mle(&partition.pooled(), &config.scaling)?;
    let (items, anchored) = truth.sorted_anchored();
    if items != scale.items() {
        return Err(Error::Validation("records do not cover every ground-truth item".into()));
    }
    let ensemble = bootstrap_ensemble(
        &partition,
        &BootstrapConfig {
            replicates: config.replicates,
            seed,
            scaling: config.scaling,
        },
    )?;
    let cis = confidence_intervals(&ensemble, config.level)?;
    let covered = cis.intervals.iter().zip(&anchored).filter(|(ci, t)| ci.contains(**t)).count();
    let metrics = ExperimentMetrics {
        srcc: srcc(scale.scores(), &anchored)?,
        median_ci: median_ci_size(&cis)?,
        coverage: covered as f64 / anchored.len() as f64,
    };
    Ok((scale, cis, metrics))
}

/// Fraction of (repetition, item) pairs whose anchored truth lies inside
/// its `level` interval. Repetition `r` simulates with `sub_seed(seed, r)`.
pub fn coverage_experiment(
    truth: &GroundTruth,
    config: &SimulationConfig,
    repetitions: usize,
    level: f64,
    evaluation: &EvaluationConfig,
) -> Result<f64> {
    if repetitions < 50 {
        return Err(Error::Validation(format!("coverage needs at least 50 repetitions, got {repetitions}")));
    }
    config.validate()?;
    let evaluation = EvaluationConfig {
        level,
        ..evaluation.clone()
    };
    let bootstrap_seed = labeled_seed(config.seed, "bootstrap");
    let fractions: Vec<f64> = (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let sim = SimulationConfig {
                seed: sub_seed(config.seed, r as u64),
                ..config.clone()
            };
            let records = simulate_experiment(truth, &sim)?;
            let (_, _, m) = evaluate_experiment(truth, &records, &evaluation, sub_seed(bootstrap_seed, r as u64))?;
            Ok(m.coverage)
        })
        .collect::<Result<_>>()?;
    Ok(fractions.iter().sum::<f64>() / fractions.len() as f64)
}
