//! JSON report written by `kmono test`.
//!
//! Every floating-point number is rounded to 6 significant digits before it
//! is written, so a report parsed back and re-rendered is byte-identical.

use std::time::{SystemTime, UNIX_EPOCH};

use kmono_core::{CountSample, EmpiricalPmf, TestConfig, TestResult};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ingest::Format;

pub const TOOL: &str = "kmono";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub path: String,
    pub format: Format,
    pub n: u64,
    pub support_min: u64,
    pub support_max: u64,
    /// Empirical p.m.f. on `support_min..=support_max`.
    pub p_hat: Vec<f64>,
}

impl InputSummary {
    pub fn new(path: &str, format: Format, sample: &CountSample) -> Self {
        Self {
            path: path.to_string(),
            format,
            n: sample.n(),
            support_min: sample.support_min(),
            support_max: sample.support_max(),
            p_hat: EmpiricalPmf::from_sample(sample).probs().to_vec(),
        }
    }
}

/// The only part of a report that changes between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Seconds since the Unix epoch when the run started.
    pub timestamp: u64,
    pub elapsed_secs: f64,
}

impl Timing {
    pub fn since(start: SystemTime) -> Self {
        Self {
            timestamp: start.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            elapsed_secs: start.elapsed().map_or(0.0, |d| d.as_secs_f64()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub input: InputSummary,
    pub config: TestConfig,
    pub result: TestResult,
    pub timing: Timing,
}

impl Report {
    pub fn new(input: InputSummary, config: TestConfig, result: TestResult, timing: Timing) -> Self {
        Self { tool: TOOL.into(), version: VERSION.into(), input, config, result, timing }
    }

    fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report fields serialize");
        round_floats(&mut v);
        v
    }

    /// Pretty JSON with a trailing newline.
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// The report as it reads back after [`render`](Self::render).
    pub fn rounded(&self) -> Self {
        serde_json::from_value(self.to_value()).expect("rounded report deserializes")
    }
}

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// Rounds every non-integer JSON number in place.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(num) if num.is_f64() => {
            if let Some(r) = num.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *num = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}
