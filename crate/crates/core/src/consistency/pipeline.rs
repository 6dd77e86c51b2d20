//! The end-to-end analysis: scale, bootstrap, intervals, groups, clusters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::anova::{rmanova, AnovaResult, Decision};
use super::graph::{build_significance_graph, Edge};
use super::kmeans::{estimate_group_count, kmeans_ci, PreliminaryGroup};
use super::louvain::louvain;
use super::ttest::{paired_ttest, TTest};
use crate::bootstrap::{
    bootstrap_ensemble, confidence_intervals, median_ci_size, BootstrapConfig, BootstrapEnsemble, ConfidenceIntervals,
};
use crate::matrix::ObserverPartition;
use crate::scaling::{scale_mle, QualityScale, ScalingConfig};
use crate::seed::{labeled_seed, sub_seed};
use crate::stats::{mean, sample_variance};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub seed: u64,
    /// Bootstrap replicates `b`.
    pub replicates: usize,
    pub level: f64,
    pub alpha: f64,
    pub resolution: f64,
    pub kmeans_max_iterations: usize,
    pub scaling: ScalingConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            seed: 0,
            replicates: 500,
            level: 0.95,
            alpha: 0.05,
            resolution: 1.0,
            kmeans_max_iterations: 300,
            scaling: ScalingConfig::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::Validation(format!("replicates must be at least 2, got {}", self.replicates)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Validation(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Validation(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Validation(format!("resolution must be positive, got {}", self.resolution)));
        }
        if self.kmeans_max_iterations == 0 {
            return Err(Error::Validation("kmeans_max_iterations must be positive".into()));
        }
        self.scaling.validate()
    }

    pub fn kmeans_seed(&self) -> u64 {
        labeled_seed(self.seed, "kmeans")
    }

    pub fn louvain_seed(&self, group: usize) -> u64 {
        sub_seed(labeled_seed(self.seed, "louvain"), group as u64)
    }
}

/// The statistical test applied to one preliminary group.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupTest {
    Singleton,
    PairedTTest {
        #[serde(flatten)]
        test: TTest,
        decision: Decision,
    },
    Rmanova(AnovaResult),
}

impl GroupTest {
    pub fn decision(&self) -> Decision {
        match self {
            GroupTest::Singleton => Decision::AcceptH0,
            GroupTest::PairedTTest { decision, .. } => *decision,
            GroupTest::Rmanova(a) => a.decision,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub index: usize,
    #[serde(flatten)]
    pub group: PreliminaryGroup,
    pub test: GroupTest,
    /// Significance-graph edges, present when the test rejected H₀ for 3+ items.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<Edge>>,
    pub communities: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityCluster {
    /// 0 is the lowest quality.
    pub level: usize,
    pub items: Vec<String>,
    pub mean_jod: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub items: usize,
    pub observers: usize,
    pub comparisons: u64,
    pub filled_pairs: usize,
    pub kmeans_seed: u64,
    pub louvain_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub config: AnalysisConfig,
    pub scale: QualityScale,
    pub intervals: ConfidenceIntervals,
    pub jod_range: f64,
    pub median_ci: f64,
    pub group_count: usize,
    pub groups: Vec<GroupReport>,
    pub clusters: Vec<QualityCluster>,
    pub diagnostics: Diagnostics,
    #[serde(skip)]
    pub ensemble: BootstrapEnsemble,
}

impl AnalysisReport {
    /// Cluster membership as level per item, in scale item order.
    pub fn levels(&self) -> Vec<usize> {
        self.scale
            .items()
            .iter()
            .map(|item| {
                self.clusters
                    .iter()
                    .find(|c| c.items.contains(item))
                    .map(|c| c.level)
                    .expect("clusters partition the items")
            })
            .collect()
    }
}

/// Runs the full pipeline on an observer partition.
pub fn analyze(partition: &ObserverPartition, config: &AnalysisConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let pooled = partition.pooled();
    let scale = scale_mle(&pooled, &config.scaling)?;
    let ensemble = bootstrap_ensemble(
        partition,
        &BootstrapConfig {
            replicates: config.replicates,
            seed: config.seed,
            scaling: config.scaling,
        },
    )?;
    let intervals = confidence_intervals(&ensemble, config.level)?;
    let median_ci = median_ci_size(&intervals)?;
    let jod_range = scale.range();
    let group_count = estimate_group_count(jod_range, median_ci, scale.items().len())?;
    let preliminary = kmeans_ci(&intervals, group_count, config.kmeans_seed(), config.kmeans_max_iterations)?;
    log::debug!("{} preliminary groups from k = {group_count}", preliminary.len());

    let groups: Vec<GroupReport> = preliminary
        .into_par_iter()
        .enumerate()
        .map(|(index, group)| analyze_group(index, group, &ensemble, config))
        .collect::<Result<_>>()?;

    let mut clusters: Vec<(Vec<usize>, f64, f64)> = groups
        .iter()
        .flat_map(|g| g.communities.iter())
        .map(|community| {
            let members: Vec<usize> = community
                .iter()
                .map(|item| pooled.index_of(item).expect("community items come from the matrix"))
                .collect();
            let values: Vec<f64> = ensemble.restrict(&members).into_iter().flatten().collect();
            let var = if values.len() >= 2 { sample_variance(&values) } else { 0.0 };
            (members, mean(&values), var)
        })
        .collect();
    clusters.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0[0].cmp(&b.0[0])));
    let clusters = clusters
        .into_iter()
        .enumerate()
        .map(|(level, (members, mean_jod, variance))| QualityCluster {
            level,
            items: members.iter().map(|&i| pooled.items()[i].clone()).collect(),
            mean_jod,
            variance,
        })
        .collect();

    let diagnostics = Diagnostics {
        items: pooled.len(),
        observers: partition.len(),
        comparisons: pooled.total(),
        filled_pairs: pooled.num_filled(),
        kmeans_seed: config.kmeans_seed(),
        louvain_seeds: (0..groups.len()).map(|g| config.louvain_seed(g)).collect(),
    };
    Ok(AnalysisReport {
        config: config.clone(),
        scale,
        intervals,
        jod_range,
        median_ci,
        group_count,
        groups,
        clusters,
        diagnostics,
        ensemble,
    })
}

fn analyze_group(
    index: usize,
    group: PreliminaryGroup,
    ensemble: &BootstrapEnsemble,
    config: &AnalysisConfig,
) -> Result<GroupReport> {
    let members = &group.members;
    let mut edges = None;
    let (test, communities) = match members.len() {
        1 => (GroupTest::Singleton, vec![group.items.clone()]),
        2 => {
            let test = paired_ttest(&ensemble.column(members[0]), &ensemble.column(members[1]))?;
            let decision = Decision::from_p(test.p_value, config.alpha);
            let communities = match decision {
                Decision::AcceptH0 => vec![group.items.clone()],
                Decision::RejectH0 => group.items.iter().map(|i| vec![i.clone()]).collect(),
            };
            (GroupTest::PairedTTest { test, decision }, communities)
        }
        _ => {
            let anova = rmanova(&ensemble.restrict(members), config.alpha)?;
            let communities = match anova.decision {
                Decision::AcceptH0 => vec![group.items.clone()],
                Decision::RejectH0 => {
                    let graph = build_significance_graph(members, ensemble)?;
                    let labels = louvain(&graph.weights, config.resolution, config.louvain_seed(index));
                    let k = labels.iter().max().map_or(0, |m| m + 1);
                    let mut communities = vec![Vec::new(); k];
                    for (node, &label) in labels.iter().enumerate() {
                        communities[label].push(graph.items[node].clone());
                    }
                    edges = Some(graph.labelled_edges());
                    communities
                }
            };
            (GroupTest::Rmanova(anova), communities)
        }
    };
    Ok(GroupReport {
        index,
        group,
        test,
        edges,
        communities,
    })
}
