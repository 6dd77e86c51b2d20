//! Grouping items into statistically indistinguishable quality levels.
//!
//! Intervals are clustered with k-means into preliminary groups; each group
//! is tested with a repeated-measures ANOVA over the bootstrap ensemble
//! (a paired t-test for groups of two), and rejected groups are split by
//! Louvain communities on the graph of pairwise t-test p-values.

mod anova;
mod graph;
mod kmeans;
mod louvain;
mod pipeline;
mod ttest;

pub use anova::{rmanova, sums_of_squares, AnovaResult, Decision, SumsOfSquares};
pub use graph::{build_significance_graph, Edge, SignificanceGraph};
pub use kmeans::{estimate_group_count, kmeans, kmeans_ci, wcss, KMeansFit, PreliminaryGroup, RESTARTS};
pub use louvain::{louvain, modularity, MIN_GAIN};
pub use pipeline::{analyze, AnalysisConfig, AnalysisReport, Diagnostics, GroupReport, GroupTest, QualityCluster};
pub use ttest::{paired_ttest, TTest};
