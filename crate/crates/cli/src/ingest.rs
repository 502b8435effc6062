//! Reading count data from text files.
//!
//! * `raw`: one non-negative integer observation per line.
//! * `freq`: `value,count` per line; further fields are ignored, so the output
//!   of `kmono pmf` reads back as a frequency table.
//!
//! Blank lines and lines starting with `#` are skipped in both formats.

use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use clap::ValueEnum;
use kmono_core::CountSample;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Raw,
    Freq,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Raw => "raw",
            Format::Freq => "freq",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestError {
    pub line: Option<u64>,
    pub message: String,
}

impl fmt::Display for IngestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for IngestError {}

fn at(line: u64, message: impl Into<String>) -> IngestError {
    IngestError { line: Some(line), message: message.into() }
}

fn whole(message: impl Into<String>) -> IngestError {
    IngestError { line: None, message: message.into() }
}

fn parse_count(field: &str, what: &str, line: u64) -> Result<u64, IngestError> {
    let field = field.trim();
    if field.starts_with('-') {
        return Err(at(line, format!("negative {what} {field:?}")));
    }
    field
        .parse()
        .map_err(|_| at(line, format!("expected a non-negative integer {what}, found {field:?}")))
}

pub fn parse<R: Read>(input: R, format: Format) -> Result<CountSample, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| match e.position() {
            Some(pos) => at(pos.line(), e.to_string()),
            None => whole(e.to_string()),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        match format {
            Format::Raw => {
                if record.len() != 1 {
                    return Err(at(line, "expected a single value per line"));
                }
                pairs.push((parse_count(&record[0], "value", line)?, 1));
            }
            Format::Freq => {
                if record.len() < 2 {
                    return Err(at(line, "expected `value,count`"));
                }
                let value = parse_count(&record[0], "value", line)?;
                let count = parse_count(&record[1], "count", line)?;
                pairs.push((value, count));
            }
        }
    }
    if pairs.is_empty() {
        return Err(whole("no observations in input"));
    }
    CountSample::from_frequencies(pairs).map_err(|e| whole(e.to_string()))
}

pub fn ingest(path: &Path, format: Format) -> Result<CountSample, IngestError> {
    let file = File::open(path).map_err(|e| whole(format!("{}: {e}", path.display())))?;
    parse(file, format)
}
