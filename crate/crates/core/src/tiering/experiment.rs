//! Profile, promote, measure.
//!
//! 1. Allocate the workload on CXL memory.
//! 2. Replay the warm-up prefix of the trace through the chosen tracker.
//! 3. Build a top-K plan and migrate it to host DRAM.
//! 4. Replay the remainder through the latency model.
//! 5. Score the plan against the HMU top-K reference and the ground truth.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::Range;

use crate::address_space::{Frame, MigrationStats, PageTable, TierId, TierSpec};
use crate::error::{Error, Result};
use crate::perf::{measure, speedup, Measurement};
use crate::telemetry::{HmuTracker, HotnessReport, HotnessTracker, NbParams, NbScanner, PebsParams, PebsSampler};
use crate::tiering::plan::{plan_top_k, PromotionPlan};
use crate::trace::{AccessRecord, PageId, PageSize};
use crate::workload::WorkloadConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrackerKind {
    /// No promotion: everything stays on CXL memory.
    None,
    /// Everything allocated on host DRAM; no profiling.
    DramOnly,
    Hmu,
    Pebs,
    Nb,
}

impl TrackerKind {
    pub const ALL: [TrackerKind; 5] = [
        TrackerKind::None,
        TrackerKind::DramOnly,
        TrackerKind::Hmu,
        TrackerKind::Pebs,
        TrackerKind::Nb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrackerKind::None => "none",
            TrackerKind::DramOnly => "dram-only",
            TrackerKind::Hmu => "hmu",
            TrackerKind::Pebs => "pebs",
            TrackerKind::Nb => "nb",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown tracker {s:?} (none|dram-only|hmu|pebs|nb)")))
    }
}

impl fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HmuParams {
    pub ceiling: u64,
    pub range: Option<Range<u64>>,
}

impl Default for HmuParams {
    fn default() -> Self {
        Self {
            ceiling: HmuTracker::DEFAULT_CEILING,
            range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TelemetryConfig {
    pub hmu: HmuParams,
    pub pebs: PebsParams,
    pub nb: NbParams,
}

impl Default for TelemetryConfig {
    fn default() -> Self {
        Self {
            hmu: HmuParams::default(),
            pebs: PebsParams::strided(4096, 0),
            nb: NbParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TierConfig {
    /// `None` sizes host DRAM to hold the whole workload.
    pub host_capacity_pages: Option<u64>,
    pub host_read_latency_ns: u64,
    pub host_write_latency_ns: u64,
    pub cxl_capacity_pages: u64,
    pub cxl_read_latency_ns: u64,
    pub cxl_write_latency_ns: u64,
}

impl Default for TierConfig {
    fn default() -> Self {
        Self {
            host_capacity_pages: None,
            host_read_latency_ns: TierSpec::DEFAULT_DRAM_LATENCY_NS,
            host_write_latency_ns: TierSpec::DEFAULT_DRAM_LATENCY_NS,
            cxl_capacity_pages: TierSpec::DEFAULT_CXL_CAPACITY_PAGES,
            cxl_read_latency_ns: TierSpec::DEFAULT_CXL_LATENCY_NS,
            cxl_write_latency_ns: TierSpec::DEFAULT_CXL_LATENCY_NS,
        }
    }
}

impl TierConfig {
    pub fn specs(&self, workload_pages: u64) -> (TierSpec, TierSpec) {
        (
            TierSpec {
                id: TierId::HostDram,
                capacity_pages: self.host_capacity_pages.unwrap_or(workload_pages),
                read_latency_ns: self.host_read_latency_ns,
                write_latency_ns: self.host_write_latency_ns,
            },
            TierSpec {
                id: TierId::CxlMem,
                capacity_pages: self.cxl_capacity_pages,
                read_latency_ns: self.cxl_read_latency_ns,
                write_latency_ns: self.cxl_write_latency_ns,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub workload: WorkloadConfig,
    pub tracker: TrackerKind,
    pub telemetry: TelemetryConfig,
    pub tiers: TierConfig,
    pub migration_cost_ns: u64,
    /// `None` uses the ground-truth hot-set size.
    pub k_budget: Option<u64>,
    pub warmup_fraction: f64,
    pub include_migration: bool,
    pub allow_empty: bool,
    pub baselines: Vec<TrackerKind>,
}

impl ExperimentConfig {
    pub const DEFAULT_MIGRATION_COST_NS: u64 = 2_000;
    pub const DEFAULT_WARMUP_FRACTION: f64 = 0.1;

    pub fn new(workload: WorkloadConfig, tracker: TrackerKind) -> Self {
        Self {
            workload,
            tracker,
            telemetry: TelemetryConfig::default(),
            tiers: TierConfig::default(),
            migration_cost_ns: Self::DEFAULT_MIGRATION_COST_NS,
            k_budget: None,
            warmup_fraction: Self::DEFAULT_WARMUP_FRACTION,
            include_migration: false,
            allow_empty: false,
            baselines: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.workload.validate()?;
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return Err(Error::Config(format!(
                "warmup_fraction {} must lie strictly between 0 and 1",
                self.warmup_fraction
            )));
        }
        let (host, cxl) = self.tiers.specs(0);
        host.validate()?;
        cxl.validate()?;
        Ok(())
    }
}

/// Outcome of one profile/promote/measure run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub workload: String,
    pub workload_fingerprint: String,
    pub tracker: TrackerKind,
    pub k_budget: u64,
    pub ground_truth_k: u64,
    pub warmup_records: u64,
    pub candidates: u64,
    pub pages_promoted: u64,
    /// Pages resident in host DRAM at the end of the run.
    pub pages_resident_top_tier: u64,
    pub top_tier_footprint_bytes: u64,
    pub promoted_footprint_bytes: u64,
    pub accuracy: f64,
    pub coverage: f64,
    pub overlap_with_hmu: f64,
    pub ground_truth_accuracy: f64,
    pub ground_truth_coverage: f64,
    pub measurement: Measurement,
    /// Measured time, plus migration cost when it is folded in.
    pub total_time_ns: u64,
    pub avg_access_latency_ns: f64,
    pub throughput: f64,
    pub migration: MigrationStats,
    pub include_migration: bool,
    pub speedup: BTreeMap<String, f64>,
}

/// A generated workload ready to be replayed under several trackers.
pub struct Experiment {
    cfg: ExperimentConfig,
    page_size: PageSize,
    records: Vec<AccessRecord>,
    // physical frame -> virtual page under the initial CXL allocation
    frame_to_virtual: Vec<u64>,
    workload_pages: u64,
    warmup_len: usize,
    ground_truth: HashSet<PageId>,
    reference: HashSet<PageId>,
    reference_k: u64,
    fingerprint: String,
}

impl Experiment {
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let page_size = PageSize::new(cfg.workload.page_size())?;
        let (stream, gt) = cfg.workload.generate()?;
        let records: Vec<AccessRecord> = stream.collect();
        let workload_pages = page_size.pages_for(cfg.workload.footprint_bytes());
        if let Some(r) = records
            .iter()
            .find(|r| page_size.page_of(r.phys_addr).0 >= workload_pages)
        {
            return Err(Error::Config(format!(
                "trace address {:#x} lies outside the {workload_pages}-page allocation",
                r.phys_addr
            )));
        }
        let fingerprint = crate::report::workload_fingerprint(&records, page_size)?;

        // Record the initial mapping the trace was captured under.
        let mut pt = Self::fresh_table(cfg, page_size, workload_pages)?;
        pt.alloc(workload_pages, TierId::CxlMem)?;
        let frame_to_virtual = (0..workload_pages)
            .map(|f| pt.reverse_map(TierId::CxlMem, Frame(f)).map(|p| p.0))
            .collect::<Result<Vec<_>>>()?;

        let warmup_len = ((records.len() as f64) * cfg.warmup_fraction).round() as usize;
        let ground_truth = gt
            .hot_page_set
            .iter()
            .map(|p| PageId(frame_to_virtual[p.0 as usize]))
            .collect();

        let mut hmu = HmuTracker::new(page_size);
        hmu.observe_all(&records[..warmup_len]);
        let reference_k = gt.k();
        let reference = hmu
            .report()
            .pages()
            .take(reference_k as usize)
            .map(|p| PageId(frame_to_virtual[p.0 as usize]))
            .collect();

        Ok(Self {
            cfg: cfg.clone(),
            page_size,
            records,
            frame_to_virtual,
            workload_pages,
            warmup_len,
            ground_truth,
            reference,
            reference_k,
            fingerprint,
        })
    }

    fn fresh_table(cfg: &ExperimentConfig, page_size: PageSize, workload_pages: u64) -> Result<PageTable> {
        let (host, cxl) = cfg.tiers.specs(workload_pages);
        Ok(PageTable::new(page_size, host, cxl)?.with_migration_cost(cfg.migration_cost_ns))
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn records(&self) -> &[AccessRecord] {
        &self.records
    }

    pub fn warmup(&self) -> &[AccessRecord] {
        &self.records[..self.warmup_len]
    }

    pub fn page_size(&self) -> PageSize {
        self.page_size
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn reference(&self) -> &HashSet<PageId> {
        &self.reference
    }

    pub fn ground_truth(&self) -> &HashSet<PageId> {
        &self.ground_truth
    }

    pub fn k_budget(&self) -> u64 {
        self.cfg.k_budget.unwrap_or(self.reference_k)
    }

    fn to_virtual(&self, r: &AccessRecord) -> AccessRecord {
        let frame = self.page_size.page_of(r.phys_addr).0;
        let offset = r.phys_addr & (self.page_size.bytes() - 1);
        let vaddr = (self.frame_to_virtual[frame as usize] << self.page_size.shift()) | offset;
        AccessRecord::new(r.timestamp_ns, vaddr, r.op)
    }

    /// Hotness report over the warm-up, keyed on virtual pages.
    pub fn profile(&self, kind: TrackerKind, pt: &PageTable, range: Range<u64>) -> Result<Option<HotnessReport>> {
        let warm = self.warmup();
        let t = &self.cfg.telemetry;
        Ok(match kind {
            TrackerKind::None | TrackerKind::DramOnly => None,
            TrackerKind::Hmu => {
                let mut hmu = HmuTracker::new(self.page_size).with_ceiling(t.hmu.ceiling);
                if let Some(r) = &t.hmu.range {
                    hmu = hmu.with_range(r.clone());
                }
                hmu.observe_all(warm);
                // Device counts are physical; the tiering agent needs
                // virtual pages.
                let phys = hmu.report();
                let ranked = phys
                    .ranked
                    .iter()
                    .map(|&(p, c)| Ok((pt.reverse_map(TierId::CxlMem, Frame(p.0))?, c)))
                    .collect::<Result<Vec<_>>>()?;
                Some(HotnessReport {
                    ranked,
                    total_observed: phys.total_observed,
                })
            }
            TrackerKind::Pebs => {
                let mut s = PebsSampler::new(t.pebs)?;
                s.observe_all(0, warm, pt)?;
                Some(s.report())
            }
            TrackerKind::Nb => {
                let mut nb = NbScanner::new(t.nb, range)?;
                nb.step(warm, pt);
                Some(nb.report())
            }
        })
    }

    /// Promotion plan `kind` would produce, without measuring it.
    pub fn plan(&self, kind: TrackerKind) -> Result<PromotionPlan> {
        let mut pt = Self::fresh_table(&self.cfg, self.page_size, self.workload_pages)?;
        let range = pt.alloc(self.workload_pages, TierId::CxlMem)?;
        let report = self.profile(kind, &pt, range)?;
        Ok(self.plan_from(report.as_ref()))
    }

    fn plan_from(&self, report: Option<&HotnessReport>) -> PromotionPlan {
        match report {
            Some(r) => plan_top_k(r, self.k_budget(), self.page_size),
            None => PromotionPlan {
                pages: Vec::new(),
                k_budget: self.k_budget(),
                footprint_bytes: 0,
            },
        }
    }

    pub fn run(&self, kind: TrackerKind) -> Result<ExperimentResult> {
        let mut pt = Self::fresh_table(&self.cfg, self.page_size, self.workload_pages)?;
        let home = if kind == TrackerKind::DramOnly {
            TierId::HostDram
        } else {
            TierId::CxlMem
        };
        let range = pt.alloc(self.workload_pages, home)?;

        let report = self.profile(kind, &pt, range.clone())?;
        let plan = self.plan_from(report.as_ref());
        let migration = pt.migrate(plan.pages.iter().copied(), TierId::HostDram)?;

        let segment = self.records[self.warmup_len..].iter().map(|r| self.to_virtual(r));
        let measurement = measure(segment, &pt, self.cfg.allow_empty)?;

        let candidates: HashSet<PageId> = if kind == TrackerKind::DramOnly {
            range.map(PageId).collect()
        } else {
            plan.page_set()
        };
        let ratio = |num: usize, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let hits = candidates.intersection(&self.reference).count();
        let gt_hits = candidates.intersection(&self.ground_truth).count();
        let n_cand = candidates.len() as u64;

        let total_time_ns = measurement.total_time_ns
            + if self.cfg.include_migration {
                migration.total_cost_ns()
            } else {
                0
            };
        let (avg, throughput) = if measurement.accesses == 0 || total_time_ns == 0 {
            (0.0, 0.0)
        } else {
            let n = measurement.accesses as f64;
            (total_time_ns as f64 / n, n * 1e9 / total_time_ns as f64)
        };
        let resident = pt.used_pages(TierId::HostDram);
        let mut speedup = BTreeMap::new();
        if total_time_ns > 0 {
            speedup.insert(kind.name().to_string(), 1.0);
        }

        Ok(ExperimentResult {
            workload: self.cfg.workload.name().to_string(),
            workload_fingerprint: self.fingerprint.clone(),
            tracker: kind,
            k_budget: self.k_budget(),
            ground_truth_k: self.reference_k,
            warmup_records: self.warmup_len as u64,
            candidates: n_cand,
            pages_promoted: migration.pages_moved,
            pages_resident_top_tier: resident,
            top_tier_footprint_bytes: resident * self.page_size.bytes(),
            promoted_footprint_bytes: migration.bytes_moved,
            accuracy: ratio(hits, n_cand),
            coverage: ratio(hits, self.reference_k),
            overlap_with_hmu: ratio(hits, self.reference_k),
            ground_truth_accuracy: ratio(gt_hits, n_cand),
            ground_truth_coverage: ratio(gt_hits, self.ground_truth.len() as u64),
            measurement,
            total_time_ns,
            avg_access_latency_ns: avg,
            throughput,
            migration,
            include_migration: self.cfg.include_migration,
            speedup,
        })
    }

    /// Runs the configured tracker and every baseline, filling in speedups
    /// of the main run against each baseline. Runs proceed in parallel.
    pub fn run_with_baselines(&self) -> Result<(ExperimentResult, Vec<ExperimentResult>)> {
        let main_kind = self.cfg.tracker;
        let mut kinds = vec![main_kind];
        for &b in &self.cfg.baselines {
            if !kinds.contains(&b) {
                kinds.push(b);
            }
        }
        let results: Vec<Result<ExperimentResult>> = std::thread::scope(|s| {
            let handles: Vec<_> = kinds.iter().map(|&k| s.spawn(move || self.run(k))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("experiment thread panicked"))
                .collect()
        });
        let mut results = results.into_iter().collect::<Result<Vec<_>>>()?;
        let mut main = results.remove(0);
        for b in &results {
            let s = speedup(b.total_time_ns as f64, main.total_time_ns as f64)?;
            main.speedup.insert(b.tracker.name().to_string(), s);
        }
        Ok((main, results))
    }
}

/// Prepares the workload and runs the configured tracker plus baselines.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    Ok(Experiment::prepare(cfg)?.run_with_baselines()?.0)
}
