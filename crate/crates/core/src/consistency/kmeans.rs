//! Lloyd's k-means with k-means++ seeding on interval points (lower, upper).

use rand::Rng as _;
use serde::Serialize;

use crate::bootstrap::ConfidenceIntervals;
use crate::seed;
use crate::{Error, Result};

/// Restarts per fit; the lowest within-cluster sum of squares wins.
pub const RESTARTS: usize = 10;

/// A preliminary quality group: items whose intervals cluster together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreliminaryGroup {
    /// Indices into the interval set, ascending.
    #[serde(skip)]
    pub members: Vec<usize>,
    pub items: Vec<String>,
    pub centroid: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    pub centroids: Vec<[f64; 2]>,
    pub wcss: f64,
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Within-cluster sum of squared distances to the cluster means.
pub fn wcss(points: &[[f64; 2]], assignments: &[usize], k: usize) -> f64 {
    let centroids = means(points, assignments, k, &vec![[0.0; 2]; k]);
    points
        .iter()
        .zip(assignments)
        .map(|(&p, &a)| dist2(p, centroids[a]))
        .sum()
}

fn means(points: &[[f64; 2]], assignments: &[usize], k: usize, previous: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut sums = vec![[0.0; 2]; k];
    let mut counts = vec![0usize; k];
    for (&p, &a) in points.iter().zip(assignments) {
        sums[a][0] += p[0];
        sums[a][1] += p[1];
        counts[a] += 1;
    }
    (0..k)
        .map(|c| {
            if counts[c] == 0 {
                previous[c]
            } else {
                [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64]
            }
        })
        .collect()
}

fn plus_plus_init(points: &[[f64; 2]], k: usize, rng: &mut seed::Rng) -> Vec<[f64; 2]> {
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[next]);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, points[next]));
        }
    }
    centroids
}

fn lloyd(points: &[[f64; 2]], mut centroids: Vec<[f64; 2]>, max_iterations: usize) -> KMeansFit {
    let k = centroids.len();
    let nearest = |p: [f64; 2], cs: &[[f64; 2]]| -> usize {
        let mut best = 0;
        for c in 1..cs.len() {
            if dist2(p, cs[c]) < dist2(p, cs[best]) {
                best = c;
            }
        }
        best
    };
    let mut assignments: Vec<usize> = points.iter().map(|&p| nearest(p, &centroids)).collect();
    for _ in 0..max_iterations {
        // Re-seed empty clusters at the point farthest from its own centroid.
        for c in 0..k {
            if assignments.contains(&c) {
                continue;
            }
            let mut sizes = vec![0usize; k];
            assignments.iter().for_each(|&a| sizes[a] += 1);
            let far = (0..points.len())
                .filter(|&i| sizes[assignments[i]] > 1)
                .max_by(|&i, &j| {
                    dist2(points[i], centroids[assignments[i]])
                        .total_cmp(&dist2(points[j], centroids[assignments[j]]))
                        .then(j.cmp(&i))
                });
            if let Some(i) = far {
                centroids[c] = points[i];
                assignments[i] = c;
            }
        }
        centroids = means(points, &assignments, k, &centroids);
        let next: Vec<usize> = points.iter().map(|&p| nearest(p, &centroids)).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    let score = wcss(points, &assignments, k);
    KMeansFit {
        assignments,
        centroids,
        wcss: score,
    }
}

/// Best of [`RESTARTS`] seeded k-means++ / Lloyd fits.
pub fn kmeans(points: &[[f64; 2]], k: usize, seed: u64, max_iterations: usize) -> Result<KMeansFit> {
    if k == 0 || k > points.len() {
        return Err(Error::Validation(format!(
            "k must lie in [1, {}], got {k}",
            points.len()
        )));
    }
    let mut best: Option<KMeansFit> = None;
    for restart in 0..RESTARTS {
        let mut rng = seed::rng(seed::sub_seed(seed, restart as u64));
        let fit = lloyd(points, plus_plus_init(points, k, &mut rng), max_iterations);
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Clusters interval points into at most `k` nonempty preliminary groups,
/// ordered by centroid midpoint.
pub fn kmeans_ci(cis: &ConfidenceIntervals, k: usize, seed: u64, max_iterations: usize) -> Result<Vec<PreliminaryGroup>> {
    let points: Vec<[f64; 2]> = cis.intervals.iter().map(|ci| ci.point()).collect();
    if points.iter().any(|p| p[1] < p[0]) {
        return Err(Error::Validation("interval with upper < lower".into()));
    }
    let fit = kmeans(&points, k, seed, max_iterations)?;
    let mut groups: Vec<PreliminaryGroup> = (0..k)
        .filter_map(|c| {
            let members: Vec<usize> = (0..points.len()).filter(|&i| fit.assignments[i] == c).collect();
            (!members.is_empty()).then(|| PreliminaryGroup {
                items: members.iter().map(|&i| cis.items[i].clone()).collect(),
                members,
                centroid: fit.centroids[c],
            })
        })
        .collect();
    groups.sort_by(|a, b| {
        (a.centroid[0] + a.centroid[1])
            .total_cmp(&(b.centroid[0] + b.centroid[1]))
            .then(a.members[0].cmp(&b.members[0]))
    });
    Ok(groups)
}

/// Number of preliminary groups: JOD range over median interval width,
/// rounded and clamped to `[1, n_items]`.
pub fn estimate_group_count(jod_range: f64, median_ci: f64, n_items: usize) -> Result<usize> {
    if n_items == 0 {
        return Err(Error::Validation("no items".into()));
    }
    if !(median_ci > 0.0) {
        return Ok(n_items);
    }
    let k = (jod_range / median_ci).round();
    Ok((k.max(1.0) as usize).min(n_items))
}
