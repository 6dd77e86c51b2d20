//! Forced-choice comparison records and their CSV / JSON-lines encodings.
//!
//! Both encodings share the field names
//! `study_id,condition,observer_id,item_a,item_b,winner,timestamp`; the
//! timestamp is RFC 3339 or empty.

use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One forced-choice trial: `observer_id` preferred `winner` out of the pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonRecord {
    pub study_id: String,
    pub condition: String,
    pub observer_id: String,
    pub item_a: String,
    pub item_b: String,
    pub winner: String,
    pub timestamp: Option<DateTime<Utc>>,
}

impl ComparisonRecord {
    /// Builds a record, checking that the pair is proper and the winner belongs to it.
    pub fn new(
        study_id: impl Into<String>,
        condition: impl Into<String>,
        observer_id: impl Into<String>,
        item_a: impl Into<String>,
        item_b: impl Into<String>,
        winner: impl Into<String>,
        timestamp: Option<DateTime<Utc>>,
    ) -> Result<Self> {
        let record = Self {
            study_id: study_id.into(),
            condition: condition.into(),
            observer_id: observer_id.into(),
            item_a: item_a.into(),
            item_b: item_b.into(),
            winner: winner.into(),
            timestamp,
        };
        record.check().map_err(Error::Validation)?;
        Ok(record)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.item_a == self.item_b {
            return Err(format!("item_a and item_b are both `{}`", self.item_a));
        }
        if self.winner != self.item_a && self.winner != self.item_b {
            return Err(format!(
                "winner `{}` is not one of ({}, {})",
                self.winner, self.item_a, self.item_b
            ));
        }
        Ok(())
    }

    pub fn loser(&self) -> &str {
        if self.winner == self.item_a {
            &self.item_b
        } else {
            &self.item_a
        }
    }
}

/// Wire encoding of a record stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Csv,
    Jsonl,
}

impl FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "jsonl" | "json-lines" | "ndjson" => Ok(Self::Jsonl),
            other => Err(Error::Validation(format!("unknown record format `{other}`"))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    study_id: String,
    condition: String,
    observer_id: String,
    item_a: String,
    item_b: String,
    winner: String,
    #[serde(default)]
    timestamp: Option<String>,
}

impl Row {
    fn into_record(self, line: usize) -> Result<ComparisonRecord> {
        let timestamp = match self.timestamp.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(ts) => Some(
                DateTime::parse_from_rfc3339(ts)
                    .map_err(|e| Error::Parse {
                        line,
                        message: format!("timestamp `{ts}`: {e}"),
                    })?
                    .with_timezone(&Utc),
            ),
        };
        let record = ComparisonRecord {
            study_id: self.study_id,
            condition: self.condition,
            observer_id: self.observer_id,
            item_a: self.item_a,
            item_b: self.item_b,
            winner: self.winner,
            timestamp,
        };
        record
            .check()
            .map_err(|message| Error::InvalidRecord { line, message })?;
        Ok(record)
    }

    fn from_record(record: &ComparisonRecord) -> Self {
        Self {
            study_id: record.study_id.clone(),
            condition: record.condition.clone(),
            observer_id: record.observer_id.clone(),
            item_a: record.item_a.clone(),
            item_b: record.item_b.clone(),
            winner: record.winner.clone(),
            timestamp: Some(
                record
                    .timestamp
                    .map(|t| t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
                    .unwrap_or_default(),
            ),
        }
    }
}

/// Decodes a record stream, preserving input order.
///
/// Line numbers in errors are 1-based and count the CSV header.
pub fn read_records<R: Read>(reader: R, format: RecordFormat) -> Result<Vec<ComparisonRecord>> {
    match format {
        RecordFormat::Csv => read_csv(reader),
        RecordFormat::Jsonl => read_jsonl(reader),
    }
}

fn read_csv<R: Read>(reader: R) -> Result<Vec<ComparisonRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    let mut raw = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut raw).map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = raw.position().map_or(0, |p| p.line() as usize);
        let headers = rdr.headers().map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        let row: Row = raw.deserialize(Some(headers)).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        out.push(row.into_record(line)?);
    }
    Ok(out)
}

fn read_jsonl<R: Read>(reader: R) -> Result<Vec<ComparisonRecord>> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(row.into_record(line_no)?);
    }
    Ok(out)
}

/// Encodes records; CSV output always carries the header row.
pub fn write_records<W: Write>(
    writer: W,
    records: &[ComparisonRecord],
    format: RecordFormat,
) -> Result<()> {
    match format {
        RecordFormat::Csv => {
            let mut wtr = csv::WriterBuilder::new().has_headers(true).from_writer(writer);
            if records.is_empty() {
                wtr.write_record(CSV_HEADER).map_err(csv_io)?;
            }
            for r in records {
                wtr.serialize(Row::from_record(r)).map_err(csv_io)?;
            }
            wtr.flush()?;
        }
        RecordFormat::Jsonl => {
            let mut writer = writer;
            for r in records {
                serde_json::to_writer(&mut writer, &Row::from_record(r))
                    .map_err(|e| Error::Io(e.into()))?;
                writer.write_all(b"\n")?;
            }
            writer.flush()?;
        }
    }
    Ok(())
}

/// Header row of the CSV encoding.
pub const CSV_HEADER: [&str; 7] = [
    "study_id",
    "condition",
    "observer_id",
    "item_a",
    "item_b",
    "winner",
    "timestamp",
];

/// Encodes a single record as one CSV data line (no header), newline-terminated.
pub fn csv_line(record: &ComparisonRecord) -> Result<String> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    wtr.serialize(Row::from_record(record)).map_err(csv_io)?;
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
