//! On-disk layout of one study:
//!
//! - `study.json`: the validated definition,
//! - `records.csv`: append-only accepted choices in the pwc-core CSV schema,
//! - `beliefs.json`: belief snapshot written after every accepted choice.
//!
//! The record log is authoritative; beliefs are rebuilt from it on load and
//! the snapshot is only cross-checked.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use jodkit::records::{csv_line, read_records, CSV_HEADER};
use jodkit::{ComparisonRecord, GaussianBelief, RecordFormat};
use serde::{Deserialize, Serialize};

use crate::api::StudyDefinition;

const STUDY_FILE: &str = "study.json";
const RECORDS_FILE: &str = "records.csv";
const SNAPSHOT_FILE: &str = "beliefs.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub records: usize,
    pub beliefs: GaussianBelief,
}

#[derive(Debug, Clone)]
pub struct StudyStore {
    dir: PathBuf,
}

impl StudyStore {
    /// Creates the study directory with its definition and an empty log.
    pub fn create(root: &Path, definition: &StudyDefinition) -> std::io::Result<Self> {
        let dir = root.join(&definition.id);
        fs::create_dir_all(&dir)?;
        let store = StudyStore { dir };
        write_atomic(&store.dir.join(STUDY_FILE), &serde_json::to_vec_pretty(definition)?)?;
        let mut log = File::create(store.dir.join(RECORDS_FILE))?;
        writeln!(log, "{}", CSV_HEADER.join(","))?;
        log.sync_all()?;
        Ok(store)
    }

    pub fn open(dir: PathBuf) -> Self {
        StudyStore { dir }
    }

    pub fn load_definition(&self) -> std::io::Result<StudyDefinition> {
        Ok(serde_json::from_slice(&fs::read(self.dir.join(STUDY_FILE))?)?)
    }

    pub fn load_records(&self) -> Result<Vec<ComparisonRecord>, jodkit::Error> {
        read_records(File::open(self.dir.join(RECORDS_FILE))?, RecordFormat::Csv)
    }

    pub fn load_snapshot(&self) -> std::io::Result<Option<Snapshot>> {
        match fs::read(self.dir.join(SNAPSHOT_FILE)) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Appends one record and syncs it to disk before returning.
    pub fn append(&self, record: &ComparisonRecord) -> std::io::Result<()> {
        let line = csv_line(record).map_err(std::io::Error::other)?;
        let mut log = OpenOptions::new().append(true).open(self.dir.join(RECORDS_FILE))?;
        log.write_all(line.as_bytes())?;
        log.sync_data()
    }

    pub fn write_snapshot(&self, snapshot: &Snapshot) -> std::io::Result<()> {
        write_atomic(&self.dir.join(SNAPSHOT_FILE), &serde_json::to_vec(snapshot)?)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(tmp, path)
}

/// Study directories under `root`, in name order.
pub fn study_dirs(root: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.join(STUDY_FILE).is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}
