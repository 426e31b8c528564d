//! Per-seed report fragments, multi-seed aggregation and canonical JSON.
//!
//! Canonical JSON has object keys in byte order, two-space indentation,
//! integers written as integers and every float written in scientific
//! notation with 17 significant digits (`1.2345678901234567e-3`). Parsing
//! a canonical document and writing it again reproduces the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::quality::QualityScores;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Neighbourhood sizes used for the averaged quality scores.
pub const K_RULE: &str = "k in {2, 4, 8, ...} with k < n/2, n = test rows";

/// The six headline numbers of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSet {
    pub mse: f64,
    pub t_avg: f64,
    pub c_avg: f64,
    pub d_dev: f64,
    pub d_bias: f64,
    pub e_na: f64,
}

impl MetricSet {
    pub const NAMES: [&'static str; 6] = ["mse", "t_avg", "c_avg", "d_dev", "d_bias", "e_na"];

    pub fn values(&self) -> [f64; 6] {
        [self.mse, self.t_avg, self.c_avg, self.d_dev, self.d_bias, self.e_na]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorRow {
    /// Row of the anchor in the full dataset.
    pub index: usize,
    pub class: usize,
    /// Original label id of `class`.
    pub label: u64,
    /// Model projection of the clean anchor.
    pub z0: [f64; 2],
    pub d_dev: f64,
    pub d_bias: f64,
    pub misassignment_rate: f64,
    pub r_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    Percentile,
    Override,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseProvenance {
    pub source: SigmaSource,
    pub percentile: Option<f64>,
    /// Target radius `r`.
    pub r: f64,
    /// Pooled RMS displacement over all clouds.
    pub r_eff: f64,
    /// `r_eff / r`, absent when `r = 0`.
    pub r_eff_ratio: Option<f64>,
    pub sigma: f64,
    pub samples: usize,
    pub clip: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSummary {
    pub widths: Vec<usize>,
    pub lambda: f64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub train_rows: usize,
    pub val_rows: usize,
    pub test_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedResult {
    pub metrics: MetricSet,
    pub anchors: Vec<AnchorRow>,
    pub noise: NoiseProvenance,
    pub training: TrainingSummary,
    pub quality: QualityScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum SeedOutcome {
    Ok(SeedResult),
    Failed(SeedFailure),
}

/// Result of one seed, successful or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fragment {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub outcome: SeedOutcome,
}

impl Fragment {
    pub fn result(&self) -> Option<&SeedResult> {
        match &self.outcome {
            SeedOutcome::Ok(r) => Some(r),
            SeedOutcome::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation (denominator `n - 1`, 0 for `n = 1`).
pub fn mean_std(values: &[f64]) -> Stat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Stat { mean, std }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateMetrics {
    pub mse: Stat,
    pub t_avg: Stat,
    pub c_avg: Stat,
    pub d_dev: Stat,
    pub d_bias: Stat,
    pub e_na: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub k_rule: String,
    pub seeds: Vec<u64>,
    pub successful_seeds: Vec<u64>,
    pub failed_seeds: Vec<u64>,
    pub aggregate: AggregateMetrics,
    pub runs: Vec<Fragment>,
}

/// Combines fragments in seed order. Failed seeds stay listed in the
/// report but do not enter the statistics.
pub fn aggregate(fragments: &[Fragment]) -> Result<StabilityReport> {
    let mut runs = fragments.to_vec();
    runs.sort_by_key(|f| f.seed);
    if let Some(w) = runs.windows(2).find(|w| w[0].seed == w[1].seed) {
        return Err(Error::Validation(format!("seed {} appears twice", w[0].seed)));
    }
    let config_hash = match runs.first() {
        Some(f) => f.config_hash.clone(),
        None => return Err(Error::Validation("no fragments to aggregate".into())),
    };
    if let Some(f) = runs.iter().find(|f| f.config_hash != config_hash) {
        return Err(Error::Validation(format!(
            "seed {} was run with config {}, expected {config_hash}",
            f.seed, f.config_hash
        )));
    }
    let ok: Vec<(u64, MetricSet)> = runs
        .iter()
        .filter_map(|f| f.result().map(|r| (f.seed, r.metrics)))
        .collect();
    if ok.is_empty() {
        return Err(Error::Validation("every seed failed; nothing to aggregate".into()));
    }
    let column = |i: usize| -> Stat {
        let v: Vec<f64> = ok.iter().map(|(_, m)| m.values()[i]).collect();
        mean_std(&v)
    };
    let aggregate = AggregateMetrics {
        mse: column(0),
        t_avg: column(1),
        c_avg: column(2),
        d_dev: column(3),
        d_bias: column(4),
        e_na: column(5),
    };
    Ok(StabilityReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        config_hash,
        k_rule: K_RULE.to_string(),
        seeds: runs.iter().map(|f| f.seed).collect(),
        successful_seeds: ok.iter().map(|(s, _)| *s).collect(),
        failed_seeds: runs.iter().filter(|f| f.result().is_none()).map(|f| f.seed).collect(),
        aggregate,
        runs,
    })
}

/// Serializes `value` as canonical JSON, ending with a newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0)?;
    out.push('\n');
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, depth: usize) -> Result<()> {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_u64() {
                let _ = write!(out, "{i}");
            } else if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                if !f.is_finite() {
                    return Err(Error::Format(format!("cannot write non-finite number {f}")));
                }
                let _ = write!(out, "{f:.16e}");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s)?),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return Ok(());
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                indent(out, depth + 1);
                write_value(out, item, depth + 1)?;
            }
            out.push('\n');
            indent(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return Ok(());
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                indent(out, depth + 1);
                out.push_str(&serde_json::to_string(k)?);
                out.push_str(": ");
                write_value(out, &map[*k], depth + 1)?;
            }
            out.push('\n');
            indent(out, depth);
            out.push('}');
        }
    }
    Ok(())
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_canonical_json(value)?).map_err(|e| Error::io(path, e))
}

pub fn write_report(report: &StabilityReport, path: impl AsRef<Path>) -> Result<()> {
    write_json(report, path)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
