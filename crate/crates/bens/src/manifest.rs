//! Corpus manifests: CSV rows of (path, speaker_id, label) naming the audio
//! files to analyze. Explicit speaker attribution is what makes
//! leave-one-speaker-out evaluation trustworthy, so manifests are required
//! instead of directory scanning.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class label attached to a manifest row or feature row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleLabel {
    Human,
    Synthetic,
    Unlabeled,
}

impl fmt::Display for SampleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleLabel::Human => "human",
            SampleLabel::Synthetic => "synthetic",
            SampleLabel::Unlabeled => "unlabeled",
        })
    }
}

impl FromStr for SampleLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "human" => Ok(SampleLabel::Human),
            "synthetic" => Ok(SampleLabel::Synthetic),
            "unlabeled" | "" => Ok(SampleLabel::Unlabeled),
            other => Err(format!(
                "unknown label '{other}' (expected human, synthetic, or unlabeled)"
            )),
        }
    }
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub speaker_id: String,
    pub label: SampleLabel,
}

/// An ordered set of manifest rows with unique paths.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.speaker_id.trim().is_empty() {
                return Err(Error::DataError(format!(
                    "manifest entry {} has an empty speaker_id",
                    e.path.display()
                )));
            }
            if !seen.insert(e.path.clone()) {
                return Err(Error::DataError(format!(
                    "duplicate manifest path {}",
                    e.path.display()
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Read a manifest CSV (`path,speaker_id,label`). Relative paths are
    /// resolved against the manifest file's directory.
    pub fn read(path: &Path) -> Result<Self> {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_open_error(path, e))?;
        let headers = reader
            .headers()
            .map_err(|e| Error::ManifestParse {
                path: path.to_path_buf(),
                line: 1,
                detail: e.to_string(),
            })?
            .clone();
        let expected = ["path", "speaker_id", "label"];
        let header_fields: Vec<&str> = headers.iter().collect();
        if header_fields != expected {
            return Err(Error::ManifestParse {
                path: path.to_path_buf(),
                line: 1,
                detail: format!(
                    "header must be 'path,speaker_id,label', got '{}'",
                    header_fields.join(",")
                ),
            });
        }
        let mut entries = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| Error::ManifestParse {
                path: path.to_path_buf(),
                line,
                detail: e.to_string(),
            })?;
            if record.len() != 3 {
                return Err(Error::ManifestParse {
                    path: path.to_path_buf(),
                    line,
                    detail: format!("expected 3 fields, got {}", record.len()),
                });
            }
            let label = record[2].parse::<SampleLabel>().map_err(|detail| {
                Error::ManifestParse {
                    path: path.to_path_buf(),
                    line,
                    detail,
                }
            })?;
            let entry_path = PathBuf::from(&record[0]);
            let entry_path = if entry_path.is_relative() {
                base.join(entry_path)
            } else {
                entry_path
            };
            entries.push(ManifestEntry {
                path: entry_path,
                speaker_id: record[1].to_string(),
                label,
            });
        }
        if entries.is_empty() {
            return Err(Error::EmptyManifest(path.to_path_buf()));
        }
        Manifest::new(entries).map_err(|e| match e {
            Error::DataError(detail) => Error::ManifestParse {
                path: path.to_path_buf(),
                line: 0,
                detail,
            },
            other => other,
        })
    }

    /// Write a manifest CSV. Paths are written as given.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| csv_open_error(path, e))?;
        writer
            .write_record(["path", "speaker_id", "label"])
            .map_err(|e| csv_write_error(path, e))?;
        for e in &self.entries {
            writer
                .write_record([
                    e.path.to_string_lossy().as_ref(),
                    e.speaker_id.as_str(),
                    &e.label.to_string(),
                ])
                .map_err(|e| csv_write_error(path, e))?;
        }
        writer.flush().map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Ok(())
    }
}

pub(crate) fn csv_open_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
            Error::FileNotFound(path.to_path_buf())
        }
        _ => Error::DataError(format!("cannot open {}: {e}", path.display())),
    }
}

pub(crate) fn csv_write_error(path: &Path, e: csv::Error) -> Error {
    Error::DataError(format!("cannot write {}: {e}", path.display()))
}
