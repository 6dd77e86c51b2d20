//! `jodkit analyze`: the full clustering report of one scene.

use std::path::Path;

use jodkit::consistency::{analyze, AnalysisConfig, AnalysisReport};
use jodkit::{ObserverPartition, RecordFormat};
use serde::Serialize;

use crate::error::Result;
use crate::io::{read_scene, to_json, InputInfo};

#[derive(Debug, Serialize)]
struct AnalyzeOutput {
    input: InputInfo,
    #[serde(flatten)]
    report: AnalysisReport,
}

pub fn run(input: &Path, format: Option<RecordFormat>, config: &AnalysisConfig) -> Result<Vec<u8>> {
    config.validate()?;
    let (records, info) = read_scene(input, format)?;
    let partition = ObserverPartition::from_records(&records)?;
    log::info!(
        "analyzing {} items, {} observers, b = {}",
        partition.items().len(),
        partition.len(),
        config.replicates
    );
    let report = analyze(&partition, config)?;
    to_json(&AnalyzeOutput { input: info, report })
}
