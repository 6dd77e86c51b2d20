//! `jodkit simulate`: synthetic experiments driven by a TOML file.
//!
//! ```toml
//! seed = 7
//!
//! [truth]
//! layout = "uniform-grid"        # planted-levels | clustered-with-outlier | explicit
//! items = 20
//! span = 6.0
//!
//! [noise]
//! inter_variance = 0.1
//! intra_variance = 0.1
//!
//! [design]
//! observers = 30
//! comparisons_per_observer = 134
//! strategy = "random"            # round-robin | active
//!
//! [metrics]                      # optional: bootstrap metrics
//! replicates = 200
//! level = 0.95
//! coverage_repetitions = 0       # ≥ 50 enables repeated_coverage
//!
//! [sweep]                        # optional
//! parameter = "budget"           # observers | gap_scale | inter_variance | intra_variance
//! values = [1000, 2000, 4000]
//! ```
//!
//! The output directory receives `records.csv` (or `records.jsonl`),
//! `metrics.csv` in long form (`parameter,value,metric,result,seed`) and
//! `config.json` with the effective configuration.

use std::fmt::Write as _;
use std::path::Path;

use jodkit::records::write_records;
use jodkit::scaling::scale_mle;
use jodkit::seed::labeled_seed;
use jodkit::simulate::{
    coverage_experiment, evaluate_experiment, simulate_experiment, srcc, EvaluationConfig, GroundTruth, PairStrategy,
    SimulationConfig, CONDITION,
};
use jodkit::{ObserverPartition, RecordFormat, ScalingConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::{read_text, to_json};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    #[serde(default)]
    pub seed: u64,
    pub truth: TruthLayout,
    #[serde(default)]
    pub noise: Noise,
    pub design: Design,
    pub metrics: Option<MetricsOptions>,
    pub sweep: Option<Sweep>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TruthLayout {
    UniformGrid { items: usize, span: f64 },
    PlantedLevels { levels: Vec<f64>, per_level: usize },
    ClusteredWithOutlier { cluster_items: usize, spread: f64, outlier: f64 },
    Explicit { items: Vec<String>, quality: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    pub inter_variance: f64,
    pub intra_variance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Design {
    pub observers: usize,
    pub comparisons_per_observer: usize,
    #[serde(default = "default_strategy")]
    pub strategy: PairStrategy,
}

fn default_strategy() -> PairStrategy {
    PairStrategy::Random
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsOptions {
    pub replicates: usize,
    pub level: f64,
    pub coverage_repetitions: usize,
    pub scaling: ScalingConfig,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        let e = EvaluationConfig::default();
        MetricsOptions {
            replicates: e.replicates,
            level: e.level,
            coverage_repetitions: 0,
            scaling: e.scaling,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Total comparisons; each observer gets `round(value / observers)`.
    Budget,
    Observers,
    /// Multiplies every gap to the mean quality.
    GapScale,
    InterVariance,
    IntraVariance,
}

impl SweepParameter {
    fn name(self) -> &'static str {
        match self {
            SweepParameter::Budget => "budget",
            SweepParameter::Observers => "observers",
            SweepParameter::GapScale => "gap_scale",
            SweepParameter::InterVariance => "inter_variance",
            SweepParameter::IntraVariance => "intra_variance",
        }
    }
}

/// One simulated condition of the run.
struct Point {
    parameter: &'static str,
    value: f64,
    label: String,
    truth: GroundTruth,
    config: SimulationConfig,
}

impl SimulateFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("simulation config: {e}")))
    }

    fn truth(&self) -> Result<GroundTruth> {
        let Noise {
            inter_variance: inter,
            intra_variance: intra,
        } = self.noise;
        let truth = match &self.truth {
            TruthLayout::UniformGrid { items, span } => GroundTruth::uniform_grid(*items, *span, inter, intra),
            TruthLayout::PlantedLevels { levels, per_level } => GroundTruth::planted_levels(levels, *per_level, inter, intra),
            TruthLayout::ClusteredWithOutlier {
                cluster_items,
                spread,
                outlier,
            } => GroundTruth::clustered_with_outlier(*cluster_items, *spread, *outlier, inter, intra),
            TruthLayout::Explicit { items, quality } => GroundTruth::new(items.clone(), quality.clone(), inter, intra),
        };
        truth.map_err(|e| CliError::Usage(format!("simulation config [truth]: {e}")))
    }

    fn base_config(&self) -> SimulationConfig {
        SimulationConfig {
            n_observers: self.design.observers,
            comparisons_per_observer: self.design.comparisons_per_observer,
            pair_strategy: self.design.strategy,
            seed: self.seed,
        }
    }

    fn points(&self) -> Result<Vec<Point>> {
        let truth = self.truth()?;
        let base = self.base_config();
        let invalid = |e: jodkit::Error| CliError::Usage(format!("simulation config: {e}"));
        let Some(sweep) = &self.sweep else {
            base.validate().map_err(invalid)?;
            return Ok(vec![Point {
                parameter: SweepParameter::Budget.name(),
                value: base.total_comparisons() as f64,
                label: CONDITION.to_string(),
                truth,
                config: base,
            }]);
        };
        if sweep.values.is_empty() {
            return Err(CliError::Usage("simulation config [sweep]: values is empty".into()));
        }
        let count = |v: f64, what: &str| -> Result<usize> {
            if v.fract() != 0.0 || v < 1.0 {
                return Err(CliError::Usage(format!("simulation config [sweep]: {what} {v} is not a positive integer")));
            }
            Ok(v as usize)
        };
        let mut points = Vec::with_capacity(sweep.values.len());
        for &value in &sweep.values {
            let mut cfg = base.clone();
            let mut t = truth.clone();
            match sweep.parameter {
                SweepParameter::Budget => {
                    let total = count(value, "budget")?;
                    cfg.comparisons_per_observer = (total as f64 / cfg.n_observers.max(1) as f64).round() as usize;
                }
                SweepParameter::Observers => cfg.n_observers = count(value, "observers")?,
                SweepParameter::GapScale => t = t.with_gaps_scaled(value),
                SweepParameter::InterVariance => t.inter_variance = value,
                SweepParameter::IntraVariance => t.intra_variance = value,
            }
            cfg.validate().map_err(invalid)?;
            t.validate().map_err(invalid)?;
            points.push(Point {
                parameter: sweep.parameter.name(),
                value,
                label: format!("{}={value}", sweep.parameter.name()),
                truth: t,
                config: cfg,
            });
        }
        Ok(points)
    }

    fn evaluation(&self) -> Option<EvaluationConfig> {
        self.metrics.as_ref().map(|m| EvaluationConfig {
            replicates: m.replicates,
            level: m.level,
            scaling: m.scaling,
        })
    }
}

/// SRCC of the MAP scale against the anchored truth.
fn scale_srcc(truth: &GroundTruth, records: &[jodkit::ComparisonRecord]) -> jodkit::Result<f64> {
    let pooled = ObserverPartition::from_records(records)?.pooled();
    let scale = scale_mle(&pooled, &ScalingConfig::default())?;
    let (items, anchored) = truth.sorted_anchored();
    if items != scale.items() {
        return Err(jodkit::Error::Validation("some ground-truth items were never compared".into()));
    }
    srcc(scale.scores(), &anchored)
}

pub fn run(config_path: &Path, seed: Option<u64>, output: &Path, format: RecordFormat) -> Result<()> {
    let mut file = SimulateFile::parse(&read_text(config_path)?)?;
    if let Some(seed) = seed {
        file.seed = seed;
    }
    if let Some(m) = &file.metrics {
        if m.coverage_repetitions > 0 && m.coverage_repetitions < 50 {
            return Err(CliError::Usage("simulation config [metrics]: coverage_repetitions must be 0 or ≥ 50".into()));
        }
    }
    let points = file.points()?;
    let evaluation = file.evaluation();
    let bootstrap_seed = labeled_seed(file.seed, "bootstrap");

    let mut records = Vec::new();
    let mut metrics = String::from("parameter,value,metric,result,seed\n");
    for point in &points {
        log::info!("simulating {}", point.label);
        let mut batch = simulate_experiment(&point.truth, &point.config)?;
        for r in &mut batch {
            r.condition.clone_from(&point.label);
        }
        let mut row = |metric: &str, result: f64| {
            let _ = writeln!(metrics, "{},{},{metric},{result},{}", point.parameter, point.value, file.seed);
        };
        row("comparisons", batch.len() as f64);
        match &evaluation {
            Some(eval) => {
                let (_, _, m) = evaluate_experiment(&point.truth, &batch, eval, bootstrap_seed)?;
                row("srcc", m.srcc);
                row("median_ci", m.median_ci);
                row("coverage", m.coverage);
                let repetitions = file.metrics.as_ref().map_or(0, |m| m.coverage_repetitions);
                if repetitions > 0 {
                    let c = coverage_experiment(&point.truth, &point.config, repetitions, eval.level, eval)?;
                    row("repeated_coverage", c);
                }
            }
            None => row("srcc", scale_srcc(&point.truth, &batch)?),
        }
        records.extend(batch);
    }

    std::fs::create_dir_all(output).map_err(|source| CliError::Write {
        path: output.to_path_buf(),
        source,
    })?;
    let write = |name: &str, bytes: &[u8]| {
        let path = output.join(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Write { path, source })
    };
    let mut encoded = Vec::new();
    write_records(&mut encoded, &records, format)?;
    let records_name = match format {
        RecordFormat::Csv => "records.csv",
        RecordFormat::Jsonl => "records.jsonl",
    };
    write(records_name, &encoded)?;
    write("metrics.csv", metrics.as_bytes())?;
    write("config.json", &to_json(&file)?)?;
    Ok(())
}
