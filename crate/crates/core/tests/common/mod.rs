#![allow(dead_code)]

use jodkit::simulate::{simulate_experiment, GroundTruth, PairStrategy, SimulationConfig};
use jodkit::ComparisonRecord;

pub fn simulation(n_observers: usize, per_observer: usize, strategy: PairStrategy, seed: u64) -> SimulationConfig {
    SimulationConfig {
        n_observers,
        comparisons_per_observer: per_observer,
        pair_strategy: strategy,
        seed,
    }
}

pub fn simulate(truth: &GroundTruth, config: &SimulationConfig) -> Vec<ComparisonRecord> {
    simulate_experiment(truth, config).expect("valid simulation")
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}
