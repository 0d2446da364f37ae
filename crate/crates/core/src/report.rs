//! JSON reports, run manifests and workload fingerprints.
//!
//! Report numbers are fixed-format so output is byte-identical across
//! platforms: times and latencies are integer nanoseconds, throughput is an
//! integer rate, and ratios carry exactly four fractional digits.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use crate::codec::{Encoding, LogWriter, HEADER_LEN, RAW16_RECORD_LEN};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::tiering::{CompareEntry, ExperimentResult};
use crate::trace::{AccessRecord, PageSize};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Bytes of the RAW16 encoding that identify a workload.
pub const FINGERPRINT_BYTES: usize = 4096;

/// SHA-256 (hex) of the first 4 KiB of the trace's RAW16 encoding.
pub fn workload_fingerprint(records: &[AccessRecord], page_size: PageSize) -> Result<String> {
    let needed = (FINGERPRINT_BYTES - HEADER_LEN)
        .div_ceil(RAW16_RECORD_LEN)
        .min(records.len());
    let mut w = LogWriter::new(Vec::new(), page_size, Encoding::Raw16, records.len() as u64)?;
    for r in &records[..needed] {
        w.push(r)?;
    }
    // Only a prefix is pushed, so the writer is dropped rather than finished.
    let bytes = w.into_sink();
    let prefix = &bytes[..bytes.len().min(FINGERPRINT_BYTES)];
    Ok(hex(&Sha256::digest(prefix)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A ratio rendered with four fractional digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio4(pub f64);

impl Serialize for Ratio4 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = if self.0.is_finite() { self.0 } else { 0.0 };
        // -0.0000 would differ from 0.0000 for no reason
        let text = format!("{:.4}", v);
        let text = if text == "-0.0000" { "0.0000".to_string() } else { text };
        RawValue::from_string(text)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub workload: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pebs: Option<u64>,
}

/// Provenance embedded in every report. `created_unix_s` is the only field
/// that varies between identical runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub created_unix_s: u64,
    pub seeds: Seeds,
    pub workload_fingerprint: String,
    /// Canonical config text; feeding it back reproduces the run.
    pub config: String,
}

impl RunManifest {
    pub fn new(cfg: &RunConfig, workload_fingerprint: &str) -> Self {
        let pebs = match cfg.experiment.telemetry.pebs.mode {
            crate::telemetry::PebsMode::Random { seed } => Some(seed),
            crate::telemetry::PebsMode::Strided => None,
        };
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            created_unix_s: timestamp(),
            seeds: Seeds {
                workload: cfg.experiment.workload.seed(),
                pebs,
            },
            workload_fingerprint: workload_fingerprint.to_string(),
            config: cfg.to_text(),
        }
    }
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> u64 {
    if let Some(v) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return v;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug, Serialize)]
struct MigrationJson {
    pages_moved: u64,
    bytes_moved: u64,
    per_page_cost_ns: u64,
    total_cost_ns: u64,
    included_in_latency: bool,
}

#[derive(Debug, Serialize)]
struct BaselineJson {
    tracker: String,
    avg_latency_ns: u64,
    total_time_ns: u64,
    pages_promoted: u64,
    footprint_bytes: u64,
}

#[derive(Debug, Serialize)]
struct ReportJson<'a> {
    manifest: &'a RunManifest,
    workload: &'a str,
    workload_fingerprint: &'a str,
    tracker: &'static str,
    k_budget: u64,
    ground_truth_k: u64,
    warmup_records: u64,
    measured_accesses: u64,
    candidates: u64,
    pages_promoted: u64,
    pages_resident_top_tier: u64,
    footprint_bytes: u64,
    promoted_footprint_bytes: u64,
    accuracy: Ratio4,
    coverage: Ratio4,
    overlap_with_hmu: Ratio4,
    ground_truth_accuracy: Ratio4,
    ground_truth_coverage: Ratio4,
    avg_latency_ns: u64,
    total_time_ns: u64,
    throughput: u64,
    throughput_unit: &'static str,
    migration: MigrationJson,
    speedup: BTreeMap<&'a str, Ratio4>,
    baselines: Vec<BaselineJson>,
}

/// Renders the experiment report. Output ends with a newline.
pub fn render_report(manifest: &RunManifest, main: &ExperimentResult, baselines: &[ExperimentResult]) -> String {
    let m = &main.migration;
    let json = ReportJson {
        manifest,
        workload: &main.workload,
        workload_fingerprint: &main.workload_fingerprint,
        tracker: main.tracker.name(),
        k_budget: main.k_budget,
        ground_truth_k: main.ground_truth_k,
        warmup_records: main.warmup_records,
        measured_accesses: main.measurement.accesses,
        candidates: main.candidates,
        pages_promoted: main.pages_promoted,
        pages_resident_top_tier: main.pages_resident_top_tier,
        footprint_bytes: main.top_tier_footprint_bytes,
        promoted_footprint_bytes: main.promoted_footprint_bytes,
        accuracy: Ratio4(main.accuracy),
        coverage: Ratio4(main.coverage),
        overlap_with_hmu: Ratio4(main.overlap_with_hmu),
        ground_truth_accuracy: Ratio4(main.ground_truth_accuracy),
        ground_truth_coverage: Ratio4(main.ground_truth_coverage),
        avg_latency_ns: main.avg_access_latency_ns.round() as u64,
        total_time_ns: main.total_time_ns,
        throughput: main.throughput.round() as u64,
        throughput_unit: main.measurement.throughput_label(),
        migration: MigrationJson {
            pages_moved: m.pages_moved,
            bytes_moved: m.bytes_moved,
            per_page_cost_ns: m.per_page_cost_ns,
            total_cost_ns: m.total_cost_ns(),
            included_in_latency: main.include_migration,
        },
        speedup: main.speedup.iter().map(|(k, &v)| (k.as_str(), Ratio4(v))).collect(),
        baselines: baselines
            .iter()
            .map(|b| BaselineJson {
                tracker: b.tracker.name().to_string(),
                avg_latency_ns: b.avg_access_latency_ns.round() as u64,
                total_time_ns: b.total_time_ns,
                pages_promoted: b.pages_promoted,
                footprint_bytes: b.top_tier_footprint_bytes,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&json).expect("report serializes");
    s.push('\n');
    s
}

/// The subset of a report that `compare` reads back.
#[derive(Debug, Clone, Deserialize)]
pub struct ReportSummary {
    pub tracker: String,
    pub workload_fingerprint: String,
    pub total_time_ns: u64,
    pub avg_latency_ns: u64,
    pub pages_promoted: u64,
    pub footprint_bytes: u64,
}

impl ReportSummary {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("not an experiment report: {e}")))
    }
}

impl From<ReportSummary> for CompareEntry {
    fn from(r: ReportSummary) -> Self {
        CompareEntry {
            name: r.tracker,
            workload_fingerprint: r.workload_fingerprint,
            total_time_ns: r.total_time_ns,
            avg_access_latency_ns: r.avg_latency_ns as f64,
            pages_promoted: r.pages_promoted,
            top_tier_footprint_bytes: r.footprint_bytes,
        }
    }
}

/// One-line JSON error object written to stderr by the CLI.
pub fn error_json(err: &Error) -> String {
    serde_json::json!({
        "error": {
            "kind": err.kind(),
            "exit_code": err.exit_code(),
            "message": err.to_string(),
        }
    })
    .to_string()
}

pub const CSV_ROW_HEADER: &str = "workload,tracker,k_budget,pages_promoted,footprint_bytes,accuracy,coverage,\
overlap_with_hmu,avg_latency_ns,total_time_ns,throughput";

/// One CSV line per result, for sweep tables.
pub fn csv_row(r: &ExperimentResult) -> String {
    format!(
        "{},{},{},{},{},{:.4},{:.4},{:.4},{},{},{}",
        r.workload,
        r.tracker,
        r.k_budget,
        r.pages_promoted,
        r.top_tier_footprint_bytes,
        r.accuracy,
        r.coverage,
        r.overlap_with_hmu,
        r.avg_access_latency_ns.round() as u64,
        r.total_time_ns,
        r.throughput.round() as u64,
    )
}
