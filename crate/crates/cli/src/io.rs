//! Reading record files and writing command output.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use jodkit::records::read_records;
use jodkit::{ComparisonRecord, RecordFormat};
use serde::Serialize;

use crate::error::{CliError, Result};

/// Where records came from, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct InputInfo {
    pub path: String,
    pub format: RecordFormat,
    pub records: usize,
    pub study_id: String,
    pub condition: String,
}

/// Explicit format, else `.jsonl`/`.ndjson` extensions, else CSV.
pub fn resolve_format(path: &Path, format: Option<RecordFormat>) -> RecordFormat {
    format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "ndjson") => RecordFormat::Jsonl,
        _ => RecordFormat::Csv,
    })
}

/// Reads one scene's records from a file, or from stdin for `-`.
pub fn read_scene(path: &Path, format: Option<RecordFormat>) -> Result<(Vec<ComparisonRecord>, InputInfo)> {
    let format = resolve_format(path, format);
    let records = if path == Path::new("-") {
        read_records(std::io::stdin().lock(), format)?
    } else {
        let file = File::open(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        read_records(BufReader::new(file), format)?
    };
    let scenes: BTreeSet<(&str, &str)> = records
        .iter()
        .map(|r| (r.study_id.as_str(), r.condition.as_str()))
        .collect();
    let (study_id, condition) = match scenes.len() {
        0 => return Err(CliError::Usage(format!("{}: no records", path.display()))),
        1 => {
            let (s, c) = scenes.into_iter().next().expect("one scene");
            (s.to_string(), c.to_string())
        }
        _ => {
            let listed: Vec<String> = scenes.iter().map(|(s, c)| format!("{s}/{c}")).collect();
            return Err(CliError::Usage(format!(
                "{}: records span {} scenes ({}); split the file per study_id/condition",
                path.display(),
                listed.len(),
                listed.join(", ")
            )));
        }
    };
    let info = InputInfo {
        path: path.display().to_string(),
        format,
        records: records.len(),
        study_id,
        condition,
    };
    Ok((records, info))
}

pub fn read_text(path: &Path) -> Result<String> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(text)
}

/// Writes bytes to `path`, or to stdout when absent.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    let fail = |source| CliError::Write {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    };
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(fail),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(fail)
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}
