//! Tabular output: the `pmf` table and study CSV plus its manifest.

use std::io::Write;

use kmono_core::{CountSample, EmpiricalPmf, StudyConfig, StudyRow};
use serde::{Deserialize, Serialize};

use crate::report::{round_sig, Timing, TOOL, VERSION};
use crate::Failure;

/// `value,count,prob,nabla_k` rows under a `#` header. The difference column
/// is empty for the last `k` values. Read back as a `freq` file this gives the
/// same sample.
pub fn write_pmf_table<W: Write>(out: &mut W, sample: &CountSample, k: usize) -> Result<(), Failure> {
    let p = EmpiricalPmf::from_sample(sample);
    let nabla = if p.len() > k { p.forward_difference(k)? } else { Vec::new() };
    writeln!(out, "# value,count,prob,nabla_{k}")?;
    for (i, (&count, &prob)) in sample.counts().iter().zip(p.probs()).enumerate() {
        let value = sample.support_min() + i as u64;
        match nabla.get(i) {
            Some(&d) => writeln!(out, "{value},{count},{},{}", round_sig(prob), round_sig(d))?,
            None => writeln!(out, "{value},{count},{},", round_sig(prob))?,
        }
    }
    Ok(())
}

pub fn write_study_csv<W: Write>(out: W, rows: &[StudyRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dist",
        "n",
        "k",
        "test",
        "replications",
        "rejections",
        "failures",
        "percentage",
        "std_error",
        "wall_time_secs",
    ])?;
    for r in rows {
        w.write_record([
            r.dist.clone(),
            r.n.to_string(),
            r.k.to_string(),
            r.test.to_string(),
            r.replications.to_string(),
            r.rejections.to_string(),
            r.failures.to_string(),
            round_sig(r.percentage).to_string(),
            round_sig(r.std_error).to_string(),
            round_sig(r.wall_time_secs).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Written next to the study CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub tool: String,
    pub version: String,
    pub config: StudyConfig,
    /// Replication `r` of every scenario uses seed `seed_base + r`.
    pub seed_base: u64,
    pub seed_last: u64,
    pub rows: Vec<StudyRow>,
    pub timing: Timing,
}

impl StudyManifest {
    pub fn new(config: StudyConfig, rows: Vec<StudyRow>, timing: Timing) -> Self {
        let seed_base = config.seed;
        let seed_last = kmono_core::harness::replication_seed(seed_base, config.replications.saturating_sub(1));
        Self { tool: TOOL.into(), version: VERSION.into(), config, seed_base, seed_last, rows, timing }
    }

    pub fn render(&self) -> String {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        crate::report::round_floats(&mut v);
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }
}
