//! Complete graph over a group's items, weighted by paired t-test p-values.

use serde::Serialize;

use super::ttest::paired_ttest;
use crate::bootstrap::BootstrapEnsemble;
use crate::{Error, Result};

/// Undirected complete graph; a high weight means the pair is statistically indistinguishable.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceGraph {
    /// Ensemble column of each node.
    pub nodes: Vec<usize>,
    pub items: Vec<String>,
    /// Dense symmetric `n × n` weights with a zero diagonal.
    pub weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub p_value: f64,
}

impl SignificanceGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Edges `(i, j, weight)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.weights[i][j]))
            .collect()
    }

    pub fn labelled_edges(&self) -> Vec<Edge> {
        self.edges()
            .into_iter()
            .map(|(i, j, w)| Edge {
                a: self.items[i].clone(),
                b: self.items[j].clone(),
                p_value: w,
            })
            .collect()
    }
}

/// Builds the significance graph of `members` (ensemble column indices).
pub fn build_significance_graph(members: &[usize], ensemble: &BootstrapEnsemble) -> Result<SignificanceGraph> {
    if members.len() < 2 {
        return Err(Error::Validation("a significance graph needs at least 2 items".into()));
    }
    let columns: Vec<Vec<f64>> = members.iter().map(|&j| ensemble.column(j)).collect();
    let n = members.len();
    let mut weights = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let p = paired_ttest(&columns[i], &columns[j])?.p_value;
            weights[i][j] = p;
            weights[j][i] = p;
        }
    }
    Ok(SignificanceGraph {
        nodes: members.to_vec(),
        items: members.iter().map(|&j| ensemble.items()[j].clone()).collect(),
        weights,
    })
}
