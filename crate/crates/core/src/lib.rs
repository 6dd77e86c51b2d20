//! Pairwise-comparison (PWC) quality scaling toolkit.
//!
//! Forced-choice comparisons are aggregated into comparison matrices, scaled
//! to Just-Objectionable-Difference (JOD) units with a Thurstone Case V
//! model, bootstrapped over observers for confidence intervals, and finally
//! grouped into statistically indistinguishable quality levels.
//!
//! The main entry points are:
//!
//! - [`records`] and [`matrix`] for ingestion and aggregation,
//! - [`scaling`] for the MAP scaler and the online Gaussian-belief backend,
//! - [`bootstrap`] for the observer bootstrap and percentile intervals,
//! - [`consistency`] for the clustering pipeline ([`consistency::analyze`]),
//! - [`simulate`] for synthetic Thurstone observers and rank correlation,
//! - [`active`] for information-gain pair selection.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active;
pub mod bootstrap;
pub mod consistency;
mod error;
pub mod matrix;
pub mod records;
pub mod scaling;
pub mod seed;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::{ComparisonMatrix, Connectivity, ObserverPartition};
pub use records::{ComparisonRecord, RecordFormat};
pub use scaling::{GaussianBelief, QualityScale, ScalingConfig};
