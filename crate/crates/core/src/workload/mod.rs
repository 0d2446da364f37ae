//! Deterministic synthetic workloads.
//!
//! Both generators are lazy iterators over [`AccessRecord`]s seeded from a
//! fixed `u64`, so regenerating with the same configuration reproduces the
//! same trace byte for byte. Addresses are offsets into the workload's
//! allocation, which starts at physical address 0 of the CXL tier.

mod dlrm;
mod mmap_bench;

use std::collections::BTreeSet;

pub use dlrm::{calibrate_zipf_exponent, expected_touched_fraction, DlrmConfig, DlrmStream};
pub use mmap_bench::{MmapBenchConfig, MmapBenchStream, CACHELINE};

use crate::trace::{AccessRecord, PageId};

/// Generator-defined hot pages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub hot_page_set: BTreeSet<PageId>,
}

impl GroundTruth {
    /// Size of the hot set, the natural promotion budget.
    pub fn k(&self) -> u64 {
        self.hot_page_set.len() as u64
    }

    pub fn contains(&self, page: PageId) -> bool {
        self.hot_page_set.contains(&page)
    }
}

/// Either workload, behind one configuration value.
#[derive(Debug, Clone, PartialEq)]
pub enum WorkloadConfig {
    MmapBench(MmapBenchConfig),
    Dlrm(DlrmConfig),
}

impl WorkloadConfig {
    pub fn name(&self) -> &'static str {
        match self {
            WorkloadConfig::MmapBench(_) => "mmap-bench",
            WorkloadConfig::Dlrm(_) => "dlrm",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            WorkloadConfig::MmapBench(c) => c.seed,
            WorkloadConfig::Dlrm(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            WorkloadConfig::MmapBench(c) => c.seed = seed,
            WorkloadConfig::Dlrm(c) => c.seed = seed,
        }
    }

    pub fn page_size(&self) -> u64 {
        match self {
            WorkloadConfig::MmapBench(c) => c.page_size,
            WorkloadConfig::Dlrm(c) => c.page_size,
        }
    }

    pub fn set_page_size(&mut self, page_size: u64) {
        match self {
            WorkloadConfig::MmapBench(c) => c.page_size = page_size,
            WorkloadConfig::Dlrm(c) => c.page_size = page_size,
        }
    }

    /// Bytes the workload allocates.
    pub fn footprint_bytes(&self) -> u64 {
        match self {
            WorkloadConfig::MmapBench(c) => c.total_bytes,
            WorkloadConfig::Dlrm(c) => c.table_bytes(),
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        match self {
            WorkloadConfig::MmapBench(c) => c.validate(),
            WorkloadConfig::Dlrm(c) => c.validate(),
        }
    }

    /// Builds the lazy trace stream and the ground truth.
    pub fn generate(&self) -> crate::Result<(Box<dyn ExactSizeIterator<Item = AccessRecord> + Send>, GroundTruth)> {
        Ok(match self {
            WorkloadConfig::MmapBench(c) => {
                let (s, gt) = c.generate()?;
                (Box::new(s), gt)
            }
            WorkloadConfig::Dlrm(c) => {
                let (s, gt) = c.generate()?;
                (Box::new(s), gt)
            }
        })
    }

    /// Number of records the generator emits.
    pub fn trace_len(&self) -> crate::Result<u64> {
        Ok(match self {
            WorkloadConfig::MmapBench(c) => c.n_accesses,
            WorkloadConfig::Dlrm(c) => c.trace_len()?,
        })
    }
}
