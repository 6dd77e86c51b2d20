//! `jodkit scale`: MAP scores of one scene.

use std::path::Path;

use jodkit::matrix::build_matrix;
use jodkit::scaling::scale_mle;
use jodkit::{QualityScale, RecordFormat, ScalingConfig};
use serde::Serialize;

use crate::error::Result;
use crate::io::{read_scene, to_json, InputInfo};

#[derive(Debug, Serialize)]
struct ScaleConfig {
    seed: u64,
    scaling: ScalingConfig,
}

#[derive(Debug, Serialize)]
struct ScaleOutput {
    input: InputInfo,
    config: ScaleConfig,
    #[serde(flatten)]
    scale: QualityScale,
}

pub fn run(input: &Path, format: Option<RecordFormat>, seed: u64, scaling: ScalingConfig) -> Result<Vec<u8>> {
    let (records, info) = read_scene(input, format)?;
    let matrix = build_matrix(&records)?;
    log::info!("scaling {} items from {} records", matrix.len(), records.len());
    let scale = scale_mle(&matrix, &scaling)?;
    to_json(&ScaleOutput {
        input: info,
        config: ScaleConfig { seed, scaling },
        scale,
    })
}
