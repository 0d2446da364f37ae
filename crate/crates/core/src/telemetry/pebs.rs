use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HotnessReport, HotnessTracker};
use crate::address_space::{Frame, PageTable, TierId};
use crate::error::{Error, Result};
use crate::trace::{AccessRecord, PageId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PebsMode {
    /// Observe records whose index is congruent to `phase` modulo `period`.
    Strided,
    /// Observe each record independently with probability `1 / period`.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PebsParams {
    pub period: u64,
    pub phase: u64,
    pub mode: PebsMode,
}

impl PebsParams {
    pub fn strided(period: u64, phase: u64) -> Self {
        Self {
            period,
            phase,
            mode: PebsMode::Strided,
        }
    }
}

/// Sampled access counts keyed on virtual pages.
///
/// Trace addresses are physical frames of `trace_tier`; each sample is
/// translated through the page table's reverse map before counting.
#[derive(Debug, Clone)]
pub struct PebsSampler {
    params: PebsParams,
    trace_tier: TierId,
    rng: Option<ChaCha8Rng>,
    counters: HashMap<PageId, u64>,
    samples: u64,
}

impl PebsSampler {
    pub fn new(params: PebsParams) -> Result<Self> {
        if params.period == 0 {
            return Err(Error::Config("PEBS period must be at least 1".into()));
        }
        let rng = match params.mode {
            PebsMode::Strided => {
                if params.phase >= params.period {
                    return Err(Error::Config(format!(
                        "PEBS phase {} must be below the period {}",
                        params.phase, params.period
                    )));
                }
                None
            }
            PebsMode::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        Ok(Self {
            params,
            trace_tier: TierId::CxlMem,
            rng,
            counters: HashMap::new(),
            samples: 0,
        })
    }

    pub fn with_trace_tier(mut self, tier: TierId) -> Self {
        self.trace_tier = tier;
        self
    }

    pub fn params(&self) -> &PebsParams {
        &self.params
    }

    #[inline]
    fn selects(&mut self, index: u64) -> bool {
        match &mut self.rng {
            None => index % self.params.period == self.params.phase,
            Some(rng) => rng.random_range(0..self.params.period) == 0,
        }
    }

    /// Considers the record at position `index` of the trace.
    pub fn observe(&mut self, index: u64, r: &AccessRecord, pt: &PageTable) -> Result<()> {
        if !self.selects(index) {
            return Ok(());
        }
        let frame = Frame(pt.page_size().page_of(r.phys_addr).0);
        let page = pt.reverse_map(self.trace_tier, frame).map_err(|_| {
            Error::Telemetry(format!(
                "sampled address {:#x} (record {index}) has no virtual mapping",
                r.phys_addr
            ))
        })?;
        *self.counters.entry(page).or_insert(0) += 1;
        self.samples += 1;
        Ok(())
    }

    /// Observes a slice whose first record sits at trace index `start`.
    pub fn observe_all(&mut self, start: u64, records: &[AccessRecord], pt: &PageTable) -> Result<()> {
        if self.rng.is_none() {
            let p = self.params.period;
            let first = start + (self.params.phase + p - start % p) % p;
            let mut i = first;
            while i < start + records.len() as u64 {
                self.observe(i, &records[(i - start) as usize], pt)?;
                i += p;
            }
            return Ok(());
        }
        for (i, r) in records.iter().enumerate() {
            self.observe(start + i as u64, r, pt)?;
        }
        Ok(())
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn count(&self, page: PageId) -> u64 {
        self.counters.get(&page).copied().unwrap_or(0)
    }
}

impl HotnessTracker for PebsSampler {
    fn name(&self) -> &'static str {
        "pebs"
    }

    fn report(&self) -> HotnessReport {
        HotnessReport::from_counts(self.counters.iter().map(|(&p, &c)| (p, c)))
    }
}
