//! Louvain community detection on small dense weighted graphs.
//!
//! Modularity with resolution γ:
//! `Q = (1/2W) Σ_ij [w_ij − γ k_i k_j / 2W] δ(c_i, c_j)`, where `k_i` is the
//! weighted degree and `2W = Σ_i k_i`.

use rand::seq::SliceRandom;

use crate::seed;

/// Stop when a level improves modularity by less than this.
pub const MIN_GAIN: f64 = 1e-9;

/// Modularity of `labels` on the symmetric dense `weights`.
pub fn modularity(weights: &[Vec<f64>], labels: &[usize], resolution: f64) -> f64 {
    let n = weights.len();
    let degree: Vec<f64> = weights.iter().map(|r| r.iter().sum()).collect();
    let two_w: f64 = degree.iter().sum();
    if two_w <= 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += weights[i][j] - resolution * degree[i] * degree[j] / two_w;
            }
        }
    }
    q / two_w
}

/// Community labels (numbered by first appearance in node order).
pub fn louvain(weights: &[Vec<f64>], resolution: f64, seed: u64) -> Vec<usize> {
    let n = weights.len();
    let mut membership: Vec<usize> = (0..n).collect();
    let total: f64 = weights.iter().flatten().sum();
    if n == 0 || total <= 0.0 {
        return membership;
    }
    let mut rng = seed::rng(seed);
    let mut graph: Vec<Vec<f64>> = weights.to_vec();
    let mut q = modularity(weights, &membership, resolution);
    loop {
        let local = local_moves(&graph, resolution, &mut rng);
        let communities = relabel(&local);
        let k = communities.iter().max().map_or(0, |m| m + 1);
        if k == graph.len() {
            break;
        }
        let candidate: Vec<usize> = membership.iter().map(|&c| communities[c]).collect();
        let q_next = modularity(weights, &candidate, resolution);
        if q_next - q < MIN_GAIN {
            break;
        }
        membership = candidate;
        q = q_next;
        graph = aggregate(&graph, &communities, k);
    }
    relabel(&membership)
}

fn relabel(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// One level of greedy node moves; returns each node's community.
fn local_moves(graph: &[Vec<f64>], resolution: f64, rng: &mut seed::Rng) -> Vec<usize> {
    let n = graph.len();
    let degree: Vec<f64> = graph.iter().map(|r| r.iter().sum()).collect();
    let two_w: f64 = degree.iter().sum();
    let mut community: Vec<usize> = (0..n).collect();
    let mut tot: Vec<f64> = degree.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut improved = true;
    let mut sweeps = 0;
    while improved && sweeps < 1000 {
        improved = false;
        sweeps += 1;
        for &i in &order {
            let own = community[i];
            tot[own] -= degree[i];
            // weight from i into each community, excluding the self-loop
            let mut links = vec![0.0; n];
            for j in 0..n {
                if j != i && graph[i][j] != 0.0 {
                    links[community[j]] += graph[i][j];
                }
            }
            let gain = |c: usize| links[c] - resolution * tot[c] * degree[i] / two_w;
            let mut best = own;
            let mut best_gain = gain(own);
            for (c, &link) in links.iter().enumerate() {
                if c != own && link > 0.0 {
                    let g = gain(c);
                    if g > best_gain + 1e-12 {
                        best = c;
                        best_gain = g;
                    }
                }
            }
            tot[best] += degree[i];
            if best != own {
                community[i] = best;
                improved = true;
            }
        }
    }
    community
}

fn aggregate(graph: &[Vec<f64>], communities: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; k]; k];
    for (i, row) in graph.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            out[communities[i]][communities[j]] += w;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
        let mut w = vec![vec![0.0; n]; n];
        for &(i, j, x) in edges {
            w[i][j] = x;
            w[j][i] = x;
        }
        w
    }

    #[test]
    fn disconnected_components_never_merge() {
        let w = from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        assert_eq!(louvain(&w, 1.0, 0), vec![0, 0, 1, 1]);
    }

    #[test]
    fn single_node() {
        assert_eq!(louvain(&[vec![0.0]], 1.0, 0), vec![0]);
    }

    #[test]
    fn zero_weights_give_singletons() {
        let w = vec![vec![0.0; 3]; 3];
        assert_eq!(louvain(&w, 1.0, 4), vec![0, 1, 2]);
    }

    #[test]
    fn not_worse_than_singletons() {
        let w = from_edges(5, &[(0, 1, 0.3), (1, 2, 0.01), (2, 3, 0.8), (3, 4, 0.2), (0, 4, 0.05)]);
        for seed in 0..10 {
            let labels = louvain(&w, 1.0, seed);
            let singles: Vec<usize> = (0..5).collect();
            assert!(modularity(&w, &labels, 1.0) >= modularity(&w, &singles, 1.0));
        }
    }

    #[test]
    fn aggregation_preserves_modularity() {
        let w = from_edges(4, &[(0, 1, 1.0), (1, 2, 0.5), (2, 3, 1.0), (0, 3, 0.1)]);
        let labels = [0, 0, 1, 1];
        let agg = aggregate(&w, &labels, 2);
        let q_fine = modularity(&w, &labels, 1.0);
        let q_coarse = modularity(&agg, &[0, 1], 1.0);
        assert!((q_fine - q_coarse).abs() < 1e-12);
    }

    /// All set partitions of `n` nodes as restricted growth strings.
    fn partitions(n: usize) -> Vec<Vec<usize>> {
        fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
            if prefix.len() == n {
                out.push(prefix.clone());
                return;
            }
            let next = prefix.iter().max().map_or(0, |m| m + 1);
            for label in 0..=next {
                prefix.push(label);
                grow(prefix, n, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        grow(&mut Vec::new(), n, &mut out);
        out
    }

    fn best_modularity(w: &[Vec<f64>]) -> f64 {
        partitions(w.len())
            .iter()
            .map(|p| modularity(w, p, 1.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn six_nodes_have_203_partitions() {
        assert_eq!(partitions(6).len(), 203);
    }

    #[test]
    fn two_cliques_match_exhaustive_optimum() {
        let mut edges = Vec::new();
        for i in 0..6 {
            for j in i + 1..6 {
                let same = (i < 3) == (j < 3);
                edges.push((i, j, if same { 0.9 } else { 0.001 }));
            }
        }
        let w = from_edges(6, &edges);
        for seed in 0..5 {
            let labels = louvain(&w, 1.0, seed);
            assert_eq!(labels, vec![0, 0, 0, 1, 1, 1]);
            assert!((modularity(&w, &labels, 1.0) - best_modularity(&w)).abs() < 1e-12);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn near_optimal_on_random_graphs() {
        use rand::Rng;
        let mut rng = seed::rng(11);
        for _ in 0..20 {
            let mut w = vec![vec![0.0; 6]; 6];
            for i in 0..6 {
                for j in i + 1..6 {
                    let x: f64 = rng.random();
                    w[i][j] = x * x;
                    w[j][i] = x * x;
                }
            }
            let q = modularity(&w, &louvain(&w, 1.0, 0), 1.0);
            let best = best_modularity(&w);
            assert!(q <= best + 1e-12);
            assert!(best - q < 0.05, "louvain {q} vs optimum {best}");
        }
    }
}
