mod common;

use jodkit::matrix::build_matrix;
use jodkit::scaling::{scale_mle, scale_online, ScalingConfig, DEFAULT_BETA, DEFAULT_INITIAL_VARIANCE};
use jodkit::simulate::{srcc, GroundTruth, PairStrategy};

fn truth20() -> GroundTruth {
    GroundTruth::uniform_grid(20, 6.0, 0.1, 0.1).unwrap()
}

#[test]
fn map_scale_recovers_twenty_item_truth() {
    let truth = truth20();
    // 30 observers, 4020 comparisons in total
    let records = common::simulate(&truth, &common::simulation(30, 134, PairStrategy::Random, 2024));
    let scale = scale_mle(&build_matrix(&records).unwrap(), &ScalingConfig::default()).unwrap();
    let (_, anchored) = truth.sorted_anchored();
    let r = srcc(scale.scores(), &anchored).unwrap();
    assert!(r >= 0.98, "srcc {r}");
    assert!(scale.scores().iter().sum::<f64>().abs() < 1e-9);
}

#[test]
fn online_beliefs_recover_twenty_item_truth() {
    let truth = truth20();
    let records = common::simulate(&truth, &common::simulation(20, 200, PairStrategy::Random, 5));
    assert_eq!(records.len(), 4000);
    let beliefs = scale_online(&records, DEFAULT_INITIAL_VARIANCE, DEFAULT_BETA).unwrap();
    let (items, anchored) = truth.sorted_anchored();
    assert_eq!(beliefs.items(), items.as_slice());
    let r = srcc(beliefs.means(), &anchored).unwrap();
    assert!(r >= 0.95, "srcc {r}");
}

#[test]
fn noiseless_wide_truth_gives_exact_ranking() {
    // 3 JOD steps: every comparison goes the right way with probability ≥ 0.98
    let truth = GroundTruth::uniform_grid(10, 27.0, 0.0, 0.0).unwrap();
    let records = common::simulate(&truth, &common::simulation(5, 90, PairStrategy::RoundRobin, 8));
    let scale = scale_mle(&build_matrix(&records).unwrap(), &ScalingConfig::default()).unwrap();
    let (_, anchored) = truth.sorted_anchored();
    assert_eq!(srcc(scale.scores(), &anchored).unwrap(), 1.0);
}
