use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::{parse_smiles, MoleculeGraph, ParseError};
use crate::error::{Error, Result};

/// One dataset row as read from disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RawRecord {
    pub smiles: String,
    pub labels: Vec<String>,
}

impl RawRecord {
    pub fn new(smiles: impl Into<String>, labels: &[&str]) -> Self {
        RawRecord {
            smiles: smiles.into(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum DropReason {
    MissingSmiles,
    Parse(ParseError),
    NoLabels,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::MissingSmiles => f.write_str("missing_smiles"),
            DropReason::Parse(e) => write!(f, "parse_error:{}@{}", e.kind, e.offset),
            DropReason::NoLabels => f.write_str("no_labels"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KeptRow {
    /// Zero-based index into the input rows.
    pub row: usize,
    pub record: RawRecord,
    pub graph: MoleculeGraph,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedRow {
    pub row: usize,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default)]
pub struct CleanReport {
    pub kept: Vec<KeptRow>,
    pub dropped: Vec<DroppedRow>,
}

impl CleanReport {
    pub fn kept_records(&self) -> impl Iterator<Item = &RawRecord> {
        self.kept.iter().map(|k| &k.record)
    }
}

/// Keeps rows with a present, parseable SMILES and at least one label.
pub fn clean_dataset(rows: &[RawRecord]) -> CleanReport {
    let mut report = CleanReport::default();
    for (row, record) in rows.iter().enumerate() {
        let smiles = record.smiles.trim();
        let outcome = if smiles.is_empty() {
            Err(DropReason::MissingSmiles)
        } else {
            match parse_smiles(smiles) {
                Err(e) => Err(DropReason::Parse(e)),
                Ok(_) if record.labels.is_empty() => Err(DropReason::NoLabels),
                Ok(graph) => Ok(graph),
            }
        };
        match outcome {
            Ok(graph) => report.kept.push(KeptRow {
                row,
                record: record.clone(),
                graph,
            }),
            Err(reason) => report.dropped.push(DroppedRow { row, reason }),
        }
    }
    report
}

fn split_labels(field: &str) -> Vec<String> {
    field
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Reads a `smiles,labels` CSV where `labels` is `;`-separated.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<RawRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_from(file)
}

pub(crate) fn read_dataset_from<R: std::io::Read>(reader: R) -> Result<Vec<RawRecord>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Headers)
        .from_reader(reader);
    let malformed = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        Error::MalformedCsv {
            line,
            message: e.to_string(),
        }
    };
    let headers = csv.headers().map_err(malformed)?.clone();
    let smiles_col = headers.iter().position(|h| h.eq_ignore_ascii_case("smiles"));
    let labels_col = headers.iter().position(|h| h.eq_ignore_ascii_case("labels"));
    let (Some(smiles_col), Some(labels_col)) = (smiles_col, labels_col) else {
        return Err(Error::MalformedCsv {
            line: 1,
            message: format!(
                "expected header `smiles,labels`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    };
    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record.map_err(malformed)?;
        rows.push(RawRecord {
            smiles: record.get(smiles_col).unwrap_or("").to_string(),
            labels: split_labels(record.get(labels_col).unwrap_or("")),
        });
    }
    Ok(rows)
}

/// Writes records in the format [`read_dataset`] accepts.
pub fn write_dataset(path: impl AsRef<Path>, records: &[RawRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let mut write = || -> std::result::Result<(), csv::Error> {
        w.write_record(["smiles", "labels"])?;
        for r in records {
            w.write_record([r.smiles.clone(), r.labels.join(";")])?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| Error::io(path, e.into()))
}

/// Writes the `row,reason` cleaning report.
pub fn write_clean_report(path: impl AsRef<Path>, report: &CleanReport) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let mut write = || -> std::result::Result<(), csv::Error> {
        w.write_record(["row", "reason"])?;
        for d in &report.dropped {
            w.write_record([d.row.to_string(), d.reason.to_string()])?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| Error::io(path, e.into()))
}
