//! Win-count matrices and their per-observer decomposition.

use std::collections::{BTreeMap, BTreeSet};

use crate::records::ComparisonRecord;
use crate::{Error, Result};

/// Sparse n×n win counts: `count(i, j)` is how often item `i` was preferred over item `j`.
///
/// Items are kept in lexicographic order so indices are stable across runs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ComparisonMatrix {
    items: Vec<String>,
    counts: BTreeMap<(usize, usize), u64>,
}

/// Connected components of the undirected comparison graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    pub connected: bool,
    pub components: Vec<Vec<String>>,
}

impl ComparisonMatrix {
    /// An all-zero matrix over `items` (sorted and deduplicated).
    pub fn empty<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let items: BTreeSet<String> = items.into_iter().map(Into::into).collect();
        Self {
            items: items.into_iter().collect(),
            counts: BTreeMap::new(),
        }
    }

    /// Aggregates records of a single (study, condition) into a matrix.
    pub fn from_records(records: &[ComparisonRecord]) -> Result<Self> {
        check_single_study(records)?;
        let items = records.iter().flat_map(|r| [r.item_a.as_str(), r.item_b.as_str()]);
        let mut m = Self::empty(items);
        for r in records {
            m.record_win(&r.winner, r.loser())?;
        }
        Ok(m)
    }

    /// Adds one win of `winner` over `loser`.
    pub fn record_win(&mut self, winner: &str, loser: &str) -> Result<()> {
        let w = self.require(winner)?;
        let l = self.require(loser)?;
        if w == l {
            return Err(Error::Validation(format!("self-comparison of `{winner}`")));
        }
        *self.counts.entry((w, l)).or_insert(0) += 1;
        Ok(())
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

    pub fn index_of(&self, item: &str) -> Option<usize> {
        self.items.binary_search_by(|probe| probe.as_str().cmp(item)).ok()
    }

    fn require(&self, item: &str) -> Result<usize> {
        self.index_of(item)
            .ok_or_else(|| Error::UnknownItem(item.to_string()))
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts.get(&(i, j)).copied().unwrap_or(0)
    }

    /// Count of `winner` over `loser` by identifier; 0 for unknown items.
    pub fn wins(&self, winner: &str, loser: &str) -> u64 {
        match (self.index_of(winner), self.index_of(loser)) {
            (Some(w), Some(l)) => self.count(w, l),
            _ => 0,
        }
    }

    /// Number of nonzero entries (the `c` of an incomplete design).
    pub fn num_filled(&self) -> usize {
        self.counts.values().filter(|&&c| c > 0).count()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Nonzero entries as `(winner, loser, count)` in index order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&(i, j), &c)| (i, j, c))
    }

    /// Element-wise sum; both matrices must share the item ordering.
    pub fn add(&mut self, other: &ComparisonMatrix) -> Result<()> {
        if self.items != other.items {
            return Err(Error::Validation(
                "matrices have different item orderings".into(),
            ));
        }
        for (i, j, c) in other.entries() {
            *self.counts.entry((i, j)).or_insert(0) += c;
        }
        Ok(())
    }

    /// Every count multiplied by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        Self {
            items: self.items.clone(),
            counts: self.counts.iter().map(|(&key, &c)| (key, c * k)).collect(),
        }
    }

    /// Same counts expressed over the superset `items` (sorted); fails if an item would be dropped.
    pub fn reindexed(&self, items: &[String]) -> Result<Self> {
        let mut out = Self::empty(items.iter().cloned());
        for (i, j, c) in self.entries() {
            let a = out.require(&self.items[i])?;
            let b = out.require(&self.items[j])?;
            out.counts.insert((a, b), c);
        }
        Ok(out)
    }

    /// Connected components, treating any comparison in either direction as an edge.
    pub fn connectivity(&self) -> Connectivity {
        let n = self.items.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, j, _) in self.entries() {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
        let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(self.items[i].clone());
        }
        let components: Vec<Vec<String>> = groups.into_values().collect();
        Connectivity {
            connected: components.len() <= 1,
            components,
        }
    }
}

/// Free-function form of [`ComparisonMatrix::from_records`].
pub fn build_matrix(records: &[ComparisonRecord]) -> Result<ComparisonMatrix> {
    ComparisonMatrix::from_records(records)
}

/// Free-function form of [`ComparisonMatrix::connectivity`].
pub fn check_connectivity(matrix: &ComparisonMatrix) -> Connectivity {
    matrix.connectivity()
}

fn check_single_study(records: &[ComparisonRecord]) -> Result<()> {
    if let Some(first) = records.first() {
        if let Some(other) = records
            .iter()
            .find(|r| r.study_id != first.study_id || r.condition != first.condition)
        {
            return Err(Error::Validation(format!(
                "records mix ({}, {}) with ({}, {})",
                first.study_id, first.condition, other.study_id, other.condition
            )));
        }
    }
    Ok(())
}

/// One comparison matrix per observer, all over the same item ordering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObserverPartition {
    observers: Vec<String>,
    matrices: Vec<ComparisonMatrix>,
}

impl ObserverPartition {
    /// Splits records by `observer_id` (observers in lexicographic order).
    pub fn from_records(records: &[ComparisonRecord]) -> Result<Self> {
        let pooled = ComparisonMatrix::from_records(records)?;
        let mut by_observer: BTreeMap<&str, ComparisonMatrix> = BTreeMap::new();
        for r in records {
            by_observer
                .entry(r.observer_id.as_str())
                .or_insert_with(|| ComparisonMatrix::empty(pooled.items().iter().cloned()))
                .record_win(&r.winner, r.loser())?;
        }
        let (observers, matrices) = by_observer
            .into_iter()
            .map(|(o, m)| (o.to_string(), m))
            .unzip();
        Ok(Self {
            observers,
            matrices,
        })
    }

    /// Assembles a partition from parts; every matrix must share one item ordering.
    pub fn new(observers: Vec<String>, matrices: Vec<ComparisonMatrix>) -> Result<Self> {
        if observers.len() != matrices.len() {
            return Err(Error::Validation(
                "observer and matrix counts differ".into(),
            ));
        }
        if let Some(first) = matrices.first() {
            if matrices.iter().any(|m| m.items() != first.items()) {
                return Err(Error::Validation(
                    "observer matrices have different item orderings".into(),
                ));
            }
        }
        Ok(Self {
            observers,
            matrices,
        })
    }

    pub fn observers(&self) -> &[String] {
        &self.observers
    }

    pub fn matrices(&self) -> &[ComparisonMatrix] {
        &self.matrices
    }

    pub fn len(&self) -> usize {
        self.observers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observers.is_empty()
    }

    pub fn items(&self) -> &[String] {
        self.matrices.first().map_or(&[], |m| m.items())
    }

    /// Element-wise sum over observers.
    pub fn pooled(&self) -> ComparisonMatrix {
        let mut total = ComparisonMatrix::empty(self.items().iter().cloned());
        for m in &self.matrices {
            total.add(m).expect("partition matrices share items");
        }
        total
    }
}

/// Free-function form of [`ObserverPartition::from_records`].
pub fn split_by_observer(records: &[ComparisonRecord]) -> Result<ObserverPartition> {
    ObserverPartition::from_records(records)
}
