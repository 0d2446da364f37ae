//! Hotness tracking mechanisms.
//!
//! * [`HmuTracker`]: device-side exact per-page counting over physical pages.
//! * [`PebsSampler`]: CPU-style 1-in-P sampling, counting virtual pages.
//! * [`NbScanner`]: OS-style protection scanning, recording hint faults.
//!
//! All three consume the same trace and produce a [`HotnessReport`].

mod hmu;
mod nb;
mod pebs;

use std::collections::HashMap;
use std::io::Write;

pub use hmu::HmuTracker;
pub use nb::{NbParams, NbScanner};
pub use pebs::{PebsMode, PebsParams, PebsSampler};

use crate::trace::PageId;

/// Ranked hot-page candidates.
///
/// Counting trackers rank by count descending, ties broken by ascending page.
/// The NB scanner ranks by fault order instead, with a count of 1 per page.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HotnessReport {
    pub ranked: Vec<(PageId, u64)>,
    pub total_observed: u64,
}

impl HotnessReport {
    pub fn from_counts<I>(counts: I) -> Self
    where
        I: IntoIterator<Item = (PageId, u64)>,
    {
        let mut ranked: Vec<_> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let total_observed = ranked.iter().map(|&(_, c)| c).sum();
        Self { ranked, total_observed }
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }

    pub fn pages(&self) -> impl Iterator<Item = PageId> + '_ {
        self.ranked.iter().map(|&(p, _)| p)
    }

    pub fn counts(&self) -> HashMap<PageId, u64> {
        self.ranked.iter().copied().collect()
    }

    /// Writes `page_id,count` rows in rank order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "page_id,count")?;
        for (p, c) in &self.ranked {
            writeln!(out, "{p},{c}")?;
        }
        Ok(())
    }
}

/// Common surface of the three trackers.
pub trait HotnessTracker {
    fn name(&self) -> &'static str;
    fn report(&self) -> HotnessReport;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_rule() {
        let r = HotnessReport::from_counts([(PageId(9), 5), (PageId(3), 5), (PageId(1), 1)]);
        assert_eq!(r.ranked, vec![(PageId(3), 5), (PageId(9), 5), (PageId(1), 1)]);
        assert_eq!(r.total_observed, 11);
    }

    #[test]
    fn empty_report() {
        let r = HotnessReport::from_counts(std::iter::empty());
        assert!(r.ranked.is_empty());
        assert_eq!(r.total_observed, 0);
    }

    #[test]
    fn csv_format() {
        let r = HotnessReport::from_counts([(PageId(2), 7), (PageId(4), 1)]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "page_id,count\n2,7\n4,1\n");
    }

    proptest::proptest! {
        #[test]
        fn ranking_is_strict(counts in proptest::collection::hash_map(0u64..500, 1u64..20, 0..100)) {
            let r = HotnessReport::from_counts(counts.iter().map(|(&p, &c)| (PageId(p), c)));
            for w in r.ranked.windows(2) {
                let (a, b) = (w[0], w[1]);
                proptest::prop_assert!(a.1 > b.1 || (a.1 == b.1 && a.0 < b.0));
            }
            proptest::prop_assert_eq!(r.total_observed, counts.values().sum::<u64>());
        }
    }
}
