use std::ops::Range;

use super::{HotnessReport, HotnessTracker};
use crate::address_space::{Frame, PageTable, TierId};
use crate::error::{Error, Result};
use crate::trace::{AccessRecord, PageId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NbParams {
    /// Accesses between scan steps. Step `k` (k >= 1) runs just before the
    /// record at index `k * scan_period`.
    pub scan_period: u64,
    /// Pages protected per scan step.
    pub scan_window_pages: u64,
    /// Offset into the mapped range where the scan cursor starts.
    pub scan_start_page: u64,
    /// Full passes over the mapped range before scanning stops.
    pub iterations: u64,
}

impl Default for NbParams {
    fn default() -> Self {
        Self {
            scan_period: 1000,
            scan_window_pages: 256,
            scan_start_page: 0,
            iterations: 2,
        }
    }
}

/// Hint-fault emulation: pages are protected round-robin, and the first
/// access to a protected page makes it a promotion candidate.
///
/// Candidates are kept in fault order. Access frequency plays no part, so a
/// page hammered before it was ever protected is invisible.
#[derive(Debug, Clone)]
pub struct NbScanner {
    params: NbParams,
    range: Range<u64>,
    trace_tier: TierId,
    protected: Vec<bool>,
    is_faulted: Vec<bool>,
    faulted: Vec<PageId>,
    // protections issued so far, across passes
    cursor: u64,
    index: u64,
}

impl NbScanner {
    /// Scans the virtual pages in `range`.
    pub fn new(params: NbParams, range: Range<u64>) -> Result<Self> {
        if params.scan_period == 0 {
            return Err(Error::Config("NB scan_period must be at least 1".into()));
        }
        let n = (range.end - range.start) as usize;
        Ok(Self {
            params,
            range,
            trace_tier: TierId::CxlMem,
            protected: vec![false; n],
            is_faulted: vec![false; n],
            faulted: Vec::new(),
            cursor: 0,
            index: 0,
        })
    }

    pub fn with_trace_tier(mut self, tier: TierId) -> Self {
        self.trace_tier = tier;
        self
    }

    fn range_len(&self) -> u64 {
        self.range.end - self.range.start
    }

    fn scan_step(&mut self) {
        let n = self.range_len();
        let total = self.params.iterations * n;
        let end = (self.cursor + self.params.scan_window_pages).min(total);
        for c in self.cursor..end {
            let slot = (self.params.scan_start_page + c) % n;
            self.protected[slot as usize] = true;
        }
        self.cursor = end;
    }

    /// Feeds the next chunk of the trace, in order.
    pub fn step(&mut self, chunk: &[AccessRecord], pt: &PageTable) {
        let n = self.range_len();
        let total = self.params.iterations * n;
        for r in chunk {
            if self.index > 0 && self.index.is_multiple_of(self.params.scan_period) && self.cursor < total {
                self.scan_step();
            }
            self.index += 1;
            let frame = Frame(pt.page_size().page_of(r.phys_addr).0);
            let Ok(page) = pt.reverse_map(self.trace_tier, frame) else {
                continue;
            };
            if !self.range.contains(&page.0) {
                continue;
            }
            let slot = (page.0 - self.range.start) as usize;
            if self.protected[slot] {
                self.protected[slot] = false;
                if !self.is_faulted[slot] {
                    self.is_faulted[slot] = true;
                    self.faulted.push(page);
                }
            }
        }
    }

    /// Promotion candidates in fault order.
    pub fn faulted(&self) -> &[PageId] {
        &self.faulted
    }

    /// True once every pass has been issued.
    pub fn finished(&self) -> bool {
        self.cursor >= self.params.iterations * self.range_len()
    }
}

impl HotnessTracker for NbScanner {
    fn name(&self) -> &'static str {
        "nb"
    }

    fn report(&self) -> HotnessReport {
        HotnessReport {
            ranked: self.faulted.iter().map(|&p| (p, 1)).collect(),
            total_observed: self.faulted.len() as u64,
        }
    }
}
