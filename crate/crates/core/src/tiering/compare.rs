use std::io::Write;

use crate::error::{Error, Result};
use crate::perf::speedup;
use crate::tiering::ExperimentResult;

/// The fields of a result that a comparison table needs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareEntry {
    pub name: String,
    pub workload_fingerprint: String,
    pub total_time_ns: u64,
    pub avg_access_latency_ns: f64,
    pub pages_promoted: u64,
    pub top_tier_footprint_bytes: u64,
}

impl From<&ExperimentResult> for CompareEntry {
    fn from(r: &ExperimentResult) -> Self {
        Self {
            name: r.tracker.name().to_string(),
            workload_fingerprint: r.workload_fingerprint.clone(),
            total_time_ns: r.total_time_ns,
            avg_access_latency_ns: r.avg_access_latency_ns,
            pages_promoted: r.pages_promoted,
            top_tier_footprint_bytes: r.top_tier_footprint_bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub entry: CompareEntry,
    /// Baseline time over this entry's time.
    pub speedup_vs_baseline: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
    /// `matrix[i][j]` is entry j's time over entry i's time: how much faster
    /// row i runs than column j.
    pub matrix: Vec<Vec<f64>>,
}

pub fn compare(entries: &[CompareEntry], baseline: &str) -> Result<Comparison> {
    let first = entries
        .first()
        .ok_or_else(|| Error::Comparison("nothing to compare".into()))?;
    if let Some(odd) = entries
        .iter()
        .find(|e| e.workload_fingerprint != first.workload_fingerprint)
    {
        return Err(Error::Comparison(format!(
            "workload fingerprint of {} ({}) differs from {} ({})",
            odd.name, odd.workload_fingerprint, first.name, first.workload_fingerprint
        )));
    }
    let base = entries
        .iter()
        .find(|e| e.name == baseline)
        .ok_or_else(|| Error::Comparison(format!("baseline {baseline:?} is not among the results")))?;
    let rows = entries
        .iter()
        .map(|e| {
            Ok(ComparisonRow {
                entry: e.clone(),
                speedup_vs_baseline: speedup(base.total_time_ns as f64, e.total_time_ns as f64)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let matrix = entries
        .iter()
        .map(|a| {
            entries
                .iter()
                .map(|b| speedup(b.total_time_ns as f64, a.total_time_ns as f64))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        baseline: baseline.to_string(),
        rows,
        matrix,
    })
}

impl Comparison {
    /// CSV with one row per result, columns after the DLRM comparison table.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "name,avg_latency_ns,total_time_ns,pages_promoted,top_tier_footprint_bytes,speedup_vs_{}",
            self.baseline
        )?;
        for r in &self.rows {
            let e = &r.entry;
            writeln!(
                out,
                "{},{:.0},{},{},{},{:.4}",
                e.name,
                e.avg_access_latency_ns,
                e.total_time_ns,
                e.pages_promoted,
                e.top_tier_footprint_bytes,
                r.speedup_vs_baseline
            )?;
        }
        Ok(())
    }
}
