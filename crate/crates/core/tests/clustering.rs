mod common;

use jodkit::bootstrap::{bootstrap_ensemble, confidence_intervals, BootstrapConfig};
use jodkit::consistency::{analyze, kmeans_ci, AnalysisConfig};
use jodkit::simulate::{GroundTruth, PairStrategy};
use jodkit::ObserverPartition;

fn partition(truth: &GroundTruth, n_observers: usize, per: usize, seed: u64) -> ObserverPartition {
    let records = common::simulate(truth, &common::simulation(n_observers, per, PairStrategy::Random, seed));
    ObserverPartition::from_records(&records).unwrap()
}

/// Squared-distance sum of the points to their group mean.
fn group_cost(points: &[[f64; 2]]) -> f64 {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    points.iter().map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sum()
}

#[test]
fn kmeans_matches_exhaustive_contiguous_search() {
    let truth = GroundTruth::uniform_grid(20, 8.0, 0.2, 0.2).unwrap();
    let p = partition(&truth, 20, 60, 12);
    let e = bootstrap_ensemble(&p, &BootstrapConfig { replicates: 200, seed: 12, ..Default::default() }).unwrap();
    let cis = confidence_intervals(&e, 0.95).unwrap();

    let groups = kmeans_ci(&cis, 4, 99, 300).unwrap();
    let found: f64 = groups
        .iter()
        .map(|g| group_cost(&g.members.iter().map(|&i| cis.intervals[i].point()).collect::<Vec<_>>()))
        .sum();

    let mut points: Vec<[f64; 2]> = cis.intervals.iter().map(|ci| ci.point()).collect();
    points.sort_by(|a, b| (a[0] + a[1]).total_cmp(&(b[0] + b[1])));
    let n = points.len();
    let mut best = f64::INFINITY;
    let mut partitions = 0;
    for a in 1..n {
        for b in a + 1..n {
            for c in b + 1..n {
                partitions += 1;
                let cost = group_cost(&points[..a])
                    + group_cost(&points[a..b])
                    + group_cost(&points[b..c])
                    + group_cost(&points[c..]);
                best = best.min(cost);
            }
        }
    }
    assert_eq!(partitions, 969);
    assert!(found <= best + 1e-9, "k-means {found} vs contiguous optimum {best}");
}

#[test]
fn clusters_partition_items_in_level_order() {
    for seed in 0..4 {
        let truth = GroundTruth::clustered_with_outlier(8, 1.0, 5.0, 0.2, 0.2).unwrap();
        let p = partition(&truth, 12, 40, seed);
        let report = analyze(&p, &AnalysisConfig { replicates: 100, seed, ..Default::default() }).unwrap();
        let mut items: Vec<String> = report.clusters.iter().flat_map(|c| c.items.clone()).collect();
        items.sort();
        assert_eq!(items, p.items());
        for (level, c) in report.clusters.iter().enumerate() {
            assert_eq!(c.level, level);
            assert!(c.variance >= 0.0);
        }
        assert!(report.clusters.windows(2).all(|w| w[0].mean_jod < w[1].mean_jod));
        let outlier = truth.items.last().unwrap();
        assert_eq!(report.clusters.last().unwrap().items, vec![outlier.clone()]);
    }
}

#[test]
fn analysis_is_independent_of_thread_count() {
    let truth = GroundTruth::planted_levels(&[-1.0, 0.0, 1.0], 3, 0.2, 0.2).unwrap();
    let p = partition(&truth, 10, 40, 6);
    let config = AnalysisConfig { replicates: 80, seed: 6, ..Default::default() };
    let run = |threads: usize| {
        let report = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| analyze(&p, &config).unwrap());
        serde_json::to_string(&report).unwrap()
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
#[ignore = "fails: ensemble-as-subjects tests reject equal-quality groups and k from range/median CI over-splits"]
fn planted_levels_are_recovered() {
    let truth = GroundTruth::planted_levels(&[-2.0, 0.0, 2.0], 5, 0.0, 0.0).unwrap();
    let planted: Vec<Vec<String>> = truth.items.chunks(5).map(|c| c.to_vec()).collect();
    let exact = (0..20u64)
        .filter(|&seed| {
            let p = partition(&truth, 30, 134, seed);
            let report = analyze(&p, &AnalysisConfig { seed, ..Default::default() }).unwrap();
            report.clusters.iter().map(|c| c.items.clone()).collect::<Vec<_>>() == planted
        })
        .count();
    assert!(exact >= 19, "{exact}/20 exact recoveries");
}
