use std::collections::HashMap;
use std::ops::Range;

use super::{HotnessReport, HotnessTracker};
use crate::trace::{AccessRecord, PageId, PageSize};

/// Exact per-physical-page access counters with a saturation ceiling.
#[derive(Debug, Clone)]
pub struct HmuTracker {
    page_size: PageSize,
    counters: HashMap<PageId, u64>,
    ceiling: u64,
    monitored_range: Option<Range<u64>>,
}

impl HmuTracker {
    pub const DEFAULT_CEILING: u64 = u32::MAX as u64;

    pub fn new(page_size: PageSize) -> Self {
        Self {
            page_size,
            counters: HashMap::new(),
            ceiling: Self::DEFAULT_CEILING,
            monitored_range: None,
        }
    }

    pub fn with_ceiling(mut self, ceiling: u64) -> Self {
        self.ceiling = ceiling;
        self
    }

    /// Restricts counting to physical byte addresses in `range`.
    pub fn with_range(mut self, range: Range<u64>) -> Self {
        self.monitored_range = Some(range);
        self
    }

    #[inline]
    pub fn observe(&mut self, r: &AccessRecord) {
        if let Some(range) = &self.monitored_range {
            if !range.contains(&r.phys_addr) {
                return;
            }
        }
        let c = self.counters.entry(self.page_size.page_of(r.phys_addr)).or_insert(0);
        if *c < self.ceiling {
            *c += 1;
        }
    }

    pub fn observe_all<'a>(&mut self, records: impl IntoIterator<Item = &'a AccessRecord>) {
        for r in records {
            self.observe(r);
        }
    }

    pub fn count(&self, page: PageId) -> u64 {
        self.counters.get(&page).copied().unwrap_or(0)
    }

    pub fn counters(&self) -> &HashMap<PageId, u64> {
        &self.counters
    }

    /// Folds in counts from a tracker that saw a different chunk of the trace.
    pub fn merge(&mut self, other: &HmuTracker) {
        for (&p, &c) in &other.counters {
            let e = self.counters.entry(p).or_insert(0);
            *e = e.saturating_add(c).min(self.ceiling);
        }
    }
}

impl HotnessTracker for HmuTracker {
    fn name(&self) -> &'static str {
        "hmu"
    }

    fn report(&self) -> HotnessReport {
        HotnessReport::from_counts(self.counters.iter().map(|(&p, &c)| (p, c)))
    }
}
