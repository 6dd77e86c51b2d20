//! Percentile bootstrap over observer matrices.
//!
//! Each replicate resamples the observers with replacement, sums their
//! matrices and rescales. Replicate `r` draws from its own sub-seed, so the
//! ensemble is identical under any parallel schedule.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng as _;
use rayon::prelude::*;
use serde::ser::{Serialize, SerializeMap, Serializer};
use serde::Deserialize;

use crate::matrix::ObserverPartition;
use crate::scaling::{Design, ScalingConfig};
use crate::seed;
use crate::{Error, Result};

/// Redraws allowed when a resampled design comes out disconnected.
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    pub scaling: ScalingConfig,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 500,
            seed: 0,
            scaling: ScalingConfig::default(),
        }
    }
}

/// `b × n` matrix of bootstrapped score vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapEnsemble {
    items: Vec<String>,
    rows: Vec<Vec<f64>>,
    seed: u64,
}

impl BootstrapEnsemble {
    /// Wraps precomputed replicate rows (each re-anchored to zero mean).
    pub fn from_rows(items: Vec<String>, mut rows: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Validation("an ensemble needs at least 2 replicates".into()));
        }
        for row in &mut rows {
            if row.len() != items.len() {
                return Err(Error::Validation("replicate row length differs from item count".into()));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation("non-finite replicate score".into()));
            }
            let m = row.iter().sum::<f64>() / row.len().max(1) as f64;
            row.iter_mut().for_each(|x| *x -= m);
        }
        Ok(Self { items, rows, seed })
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn replicate_count(&self) -> usize {
        self.rows.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// The `b × |columns|` sub-matrix for the given item indices.
    pub fn restrict(&self, columns: &[usize]) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| columns.iter().map(|&j| r[j]).collect())
            .collect()
    }

    /// CSV with an `item` column followed by one column per replicate.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["item".to_string()];
        header.extend((0..self.rows.len()).map(|r| format!("r{r}")));
        wtr.write_record(&header).map_err(io)?;
        for (j, item) in self.items.iter().enumerate() {
            let mut line = vec![item.clone()];
            line.extend(self.rows.iter().map(|row| row[j].to_string()));
            wtr.write_record(&line).map_err(io)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, seed: u64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let b = rdr.headers().map_err(|e| parse(1, e))?.len().saturating_sub(1);
        let mut items = Vec::new();
        let mut rows = vec![Vec::new(); b];
        for (idx, rec) in rdr.records().enumerate() {
            let line = idx + 2;
            let rec = rec.map_err(|e| parse(line, e))?;
            items.push(rec.get(0).unwrap_or_default().to_string());
            for (r, field) in rec.iter().skip(1).enumerate() {
                let v: f64 = field.parse().map_err(|e| parse(line, e))?;
                rows[r].push(v);
            }
        }
        Self::from_rows(items, rows, seed)
    }
}

fn io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn parse(line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Builds the bootstrap ensemble of MAP scales.
pub fn bootstrap_ensemble(partition: &ObserverPartition, config: &BootstrapConfig) -> Result<BootstrapEnsemble> {
    config.scaling.validate()?;
    if config.replicates < 2 {
        return Err(Error::Validation(format!(
            "at least 2 bootstrap replicates are required, got {}",
            config.replicates
        )));
    }
    if partition.len() < 2 {
        return Err(Error::Validation(format!(
            "bootstrapping needs at least 2 observers, got {}",
            partition.len()
        )));
    }
    let pooled = partition.pooled();
    if pooled.len() < 2 {
        return Err(Error::Validation("scaling needs at least 2 items".into()));
    }
    let conn = pooled.connectivity();
    if !conn.connected {
        return Err(Error::Disconnected {
            components: conn.components,
        });
    }

    let n = pooled.len();
    let observer_entries: Vec<Vec<(usize, usize, u64)>> = partition
        .matrices()
        .iter()
        .map(|m| m.entries().collect())
        .collect();

    let rows = (0..config.replicates)
        .into_par_iter()
        .map(|r| replicate(&observer_entries, n, config, r))
        .collect::<Result<Vec<_>>>()?;

    BootstrapEnsemble::from_rows(pooled.items().to_vec(), rows, config.seed)
}

fn replicate(
    observers: &[Vec<(usize, usize, u64)>],
    n: usize,
    config: &BootstrapConfig,
    r: usize,
) -> Result<Vec<f64>> {
    let mut rng = seed::rng(seed::sub_seed(config.seed, r as u64));
    let o = observers.len();
    let mut counts = vec![0.0f64; n * n];
    for _ in 0..MAX_REDRAWS {
        counts.iter_mut().for_each(|c| *c = 0.0);
        for _ in 0..o {
            let pick = rng.random_range(0..o);
            for &(i, j, c) in &observers[pick] {
                counts[i * n + j] += c as f64;
            }
        }
        if dense_connected(n, &counts) {
            return Design::from_dense(n, &counts).fit(&config.scaling);
        }
    }
    Err(Error::DisconnectedResample {
        replicate: r,
        attempts: MAX_REDRAWS,
    })
}

fn dense_connected(n: usize, counts: &[f64]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut reached = 1;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && counts[i * n + j] + counts[j * n + i] > 0.0 {
                seen[j] = true;
                reached += 1;
                stack.push(j);
            }
        }
    }
    reached == n
}

/// One item's interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// The interval as a point (lower, upper) for clustering.
    pub fn point(&self) -> [f64; 2] {
        [self.lower, self.upper]
    }
}

/// Percentile intervals for every item of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceIntervals {
    pub items: Vec<String>,
    pub level: f64,
    pub intervals: Vec<ConfidenceInterval>,
}

impl ConfidenceIntervals {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn get(&self, item: &str) -> Option<ConfidenceInterval> {
        self.items
            .iter()
            .position(|i| i == item)
            .map(|k| self.intervals[k])
    }
}

impl Serialize for ConfidenceIntervals {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let intervals: BTreeMap<&str, [f64; 2]> = self
            .items
            .iter()
            .map(String::as_str)
            .zip(self.intervals.iter().map(|ci| [ci.lower, ci.upper]))
            .collect();
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("level", &self.level)?;
        map.serialize_entry("intervals", &intervals)?;
        map.end()
    }
}

/// Percentile of sorted data by linear interpolation between order statistics
/// (`h = (N − 1)·q`, the "type 7" rule).
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-item percentile intervals at `level` (e.g. 0.95 → 2.5th / 97.5th percentiles).
pub fn confidence_intervals(ensemble: &BootstrapEnsemble, level: f64) -> Result<ConfidenceIntervals> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Validation(format!("level must lie in (0, 1), got {level}")));
    }
    let tail = (1.0 - level) / 2.0;
    let intervals = (0..ensemble.items().len())
        .map(|j| {
            let mut col = ensemble.column(j);
            col.sort_by(f64::total_cmp);
            ConfidenceInterval {
                lower: percentile_sorted(&col, tail),
                upper: percentile_sorted(&col, 1.0 - tail),
            }
        })
        .collect();
    Ok(ConfidenceIntervals {
        items: ensemble.items().to_vec(),
        level,
        intervals,
    })
}

/// Median interval width.
pub fn median_ci_size(cis: &ConfidenceIntervals) -> Result<f64> {
    if cis.is_empty() {
        return Err(Error::Validation("no intervals".into()));
    }
    let mut widths: Vec<f64> = cis.intervals.iter().map(ConfidenceInterval::width).collect();
    widths.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&widths, 0.5))
}

/// Max minus min of a score vector.
pub fn jod_range(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Validation("no scores".into()));
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(hi - lo)
}
