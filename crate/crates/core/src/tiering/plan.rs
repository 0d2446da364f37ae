use std::collections::HashSet;

use crate::telemetry::HotnessReport;
use crate::trace::{PageId, PageSize};

/// Pages chosen for promotion, in rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromotionPlan {
    pub pages: Vec<PageId>,
    pub k_budget: u64,
    pub footprint_bytes: u64,
}

impl PromotionPlan {
    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }

    pub fn page_set(&self) -> HashSet<PageId> {
        self.pages.iter().copied().collect()
    }
}

/// First `min(k, |ranked|)` pages of the report. Duplicate pages in the
/// report (which no tracker produces) are skipped rather than double-counted.
pub fn plan_top_k(report: &HotnessReport, k: u64, page_size: PageSize) -> PromotionPlan {
    let mut seen = HashSet::new();
    let pages: Vec<PageId> = report.pages().filter(|p| seen.insert(*p)).take(k as usize).collect();
    PromotionPlan {
        footprint_bytes: pages.len() as u64 * page_size.bytes(),
        pages,
        k_budget: k,
    }
}
