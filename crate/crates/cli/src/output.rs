//! Line-delimited JSON records and flat CSV tables.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Digest and provenance stamped on every record and table row.
#[derive(Debug, Clone, Serialize)]
pub struct Stamp {
    pub command: String,
    pub config_digest: String,
    pub provenance: String,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    #[serde(flatten)]
    stamp: &'a Stamp,
    kind: &'a str,
    record: &'a T,
}

/// Appends records to `<name>.jsonl`.
pub struct RecordWriter {
    out: BufWriter<File>,
    stamp: Stamp,
    path: PathBuf,
}

impl RecordWriter {
    pub fn create(dir: &Path, name: &str, stamp: Stamp) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{name}.jsonl"));
        Ok(Self {
            out: BufWriter::new(File::create(&path)?),
            stamp,
            path,
        })
    }

    pub fn write<T: Serialize>(&mut self, kind: &str, record: &T) -> Result<(), CliError> {
        let line = serde_json::to_string(&Envelope {
            stamp: &self.stamp,
            kind,
            record,
        })?;
        writeln!(self.out, "{line}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.out.flush()?;
        Ok(self.path)
    }
}

/// A flat table; `write` prepends the config digest to every row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, dir: &Path, name: &str, stamp: &Stamp) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{name}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(std::iter::once("config_digest").chain(self.headers.iter().map(String::as_str)))?;
        for row in &self.rows {
            w.write_record(std::iter::once(stamp.config_digest.as_str()).chain(row.iter().map(String::as_str)))?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Shortest round-trip representation; `NaN` and infinities spelled out.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
