//! Two-tier latency model and hotness statistics.
//!
//! Accesses are serialized: total time is the sum of per-access latencies,
//! with no overlap, queueing or bandwidth effects.

use std::borrow::Borrow;
use std::io::Write;

use crate::address_space::{PageTable, TierId};
use crate::error::{Error, Result};
use crate::telemetry::HotnessReport;
use crate::trace::{AccessRecord, Op};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub accesses: u64,
    pub total_time_ns: u64,
    pub avg_latency_ns: f64,
    /// Accesses per second.
    pub throughput: f64,
    pub read_only: bool,
}

impl Measurement {
    pub fn empty() -> Self {
        Self {
            accesses: 0,
            total_time_ns: 0,
            avg_latency_ns: 0.0,
            throughput: 0.0,
            read_only: true,
        }
    }

    fn from_totals(accesses: u64, total_time_ns: u64, read_only: bool) -> Self {
        if accesses == 0 {
            return Self::empty();
        }
        Self {
            accesses,
            total_time_ns,
            avg_latency_ns: total_time_ns as f64 / accesses as f64,
            throughput: accesses as f64 * 1e9 / total_time_ns as f64,
            read_only,
        }
    }

    /// Associative combination of two disjoint segments.
    pub fn combine(&self, other: &Measurement) -> Measurement {
        Self::from_totals(
            self.accesses + other.accesses,
            self.total_time_ns + other.total_time_ns,
            self.read_only && other.read_only,
        )
    }

    pub fn throughput_label(&self) -> &'static str {
        if self.read_only {
            "reads_per_s"
        } else {
            "accesses_per_s"
        }
    }
}

/// Replays a segment whose addresses are workload virtual addresses against
/// the current placement in `pt`.
pub fn measure<I>(segment: I, pt: &PageTable, allow_empty: bool) -> Result<Measurement>
where
    I: IntoIterator,
    I::Item: Borrow<AccessRecord>,
{
    let lat = |tier: TierId, op: Op| pt.spec(tier).latency(op);
    let ps = pt.page_size();
    let (mut n, mut total, mut read_only) = (0u64, 0u64, true);
    for r in segment {
        let r = r.borrow();
        let page = ps.page_of(r.phys_addr);
        let tier = pt
            .tier_of(page)
            .ok_or_else(|| Error::Measurement(format!("virtual page {page} is not mapped")))?;
        total += lat(tier, r.op);
        read_only &= r.op == Op::Read;
        n += 1;
    }
    if n == 0 && !allow_empty {
        return Err(Error::Measurement("empty measurement segment".into()));
    }
    Ok(Measurement::from_totals(n, total, read_only))
}

pub fn speedup(t_base: f64, t_new: f64) -> Result<f64> {
    if !(t_base > 0.0 && t_new > 0.0) {
        return Err(Error::Measurement(format!(
            "speedup needs positive times, got {t_base} and {t_new}"
        )));
    }
    Ok(t_base / t_new)
}

/// Cumulative access share over pages ordered hottest first.
#[derive(Debug, Clone, PartialEq)]
pub struct HotnessCdf {
    pub points: Vec<(f64, f64)>,
}

impl HotnessCdf {
    /// Access share of the hottest `page_fraction` of accessed pages.
    pub fn value_at(&self, page_fraction: f64) -> f64 {
        let n = self.points.len();
        let k = ((page_fraction.clamp(0.0, 1.0) * n as f64) + 1e-9).floor() as usize;
        if k == 0 {
            0.0
        } else {
            self.points[k - 1].1
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "page_fraction,access_fraction")?;
        for (x, y) in &self.points {
            writeln!(out, "{x:.6},{y:.6}")?;
        }
        Ok(())
    }
}

pub fn hotness_cdf(report: &HotnessReport) -> Result<HotnessCdf> {
    if report.total_observed == 0 {
        return Err(Error::Measurement("hotness CDF of an empty report".into()));
    }
    let mut counts: Vec<u64> = report.ranked.iter().map(|&(_, c)| c).collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let n = counts.len() as f64;
    let total = report.total_observed as f64;
    let mut acc = 0u64;
    let points = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            acc += c;
            ((i + 1) as f64 / n, acc as f64 / total)
        })
        .collect();
    Ok(HotnessCdf { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::address_space::TierSpec;
    use crate::trace::{PageId, PageSize};

    fn pt() -> PageTable {
        let mut pt = PageTable::new(PageSize::default(), TierSpec::host_dram(16), TierSpec::cxl_mem(16)).unwrap();
        pt.alloc(10, TierId::CxlMem).unwrap();
        pt
    }

    #[test]
    fn all_dram_reads() {
        let mut pt = pt();
        pt.migrate((0..10).map(PageId), TierId::HostDram).unwrap();
        let recs: Vec<_> = (0..10).map(|i| AccessRecord::read(i, i * 4096)).collect();
        let m = measure(&recs, &pt, false).unwrap();
        assert_eq!(m.total_time_ns, 1000);
        assert_eq!(m.avg_latency_ns, 100.0);
        assert_eq!(m.throughput, 1e7);
        assert_eq!(m.throughput_label(), "reads_per_s");
    }

    #[test]
    fn weighted_mix() {
        let mut pt = pt();
        pt.migrate([PageId(0)], TierId::HostDram).unwrap();
        let recs: Vec<_> = (0..100)
            .map(|i| AccessRecord::read(i, if i < 90 { 0 } else { 4096 }))
            .collect();
        // oracle: 0.9 * 100 + 0.1 * 350
        let m = measure(&recs, &pt, false).unwrap();
        assert_eq!(m.avg_latency_ns, 0.9 * 100.0 + 0.1 * 350.0);
        assert_eq!(m.total_time_ns, 12_500);
    }

    #[test]
    fn empty_segment() {
        let pt = pt();
        assert!(matches!(
            measure(&[] as &[AccessRecord], &pt, false),
            Err(Error::Measurement(_))
        ));
        assert_eq!(
            measure(&[] as &[AccessRecord], &pt, true).unwrap(),
            Measurement::empty()
        );
    }

    #[test]
    fn unmapped_page_is_named() {
        let pt = pt();
        let err = measure([AccessRecord::read(0, 50 * 4096)], &pt, false).unwrap_err();
        assert!(err.to_string().contains("50"));
    }

    #[test]
    fn writes_use_write_latency() {
        let host = TierSpec {
            write_latency_ns: 150,
            ..TierSpec::host_dram(4)
        };
        let mut pt = PageTable::new(PageSize::default(), host, TierSpec::cxl_mem(4)).unwrap();
        pt.alloc(1, TierId::HostDram).unwrap();
        let m = measure([AccessRecord::new(0, 0, Op::Write)], &pt, false).unwrap();
        assert_eq!(m.total_time_ns, 150);
        assert!(!m.read_only);
    }

    #[test]
    fn speedup_values() {
        assert!((speedup(127_294.0, 65_454.0).unwrap() - 1.944).abs() < 0.01);
        assert!((speedup(65_454.0, 63_324.0).unwrap() - 1.034).abs() < 0.01);
        assert_eq!(speedup(3.0, 3.0).unwrap(), 1.0);
        assert!(speedup(0.0, 1.0).is_err());
        assert!(speedup(1.0, -1.0).is_err());
    }

    #[test]
    fn cdf_two_pages() {
        let r = HotnessReport::from_counts([(PageId(0), 9), (PageId(1), 1)]);
        let cdf = hotness_cdf(&r).unwrap();
        assert_eq!(cdf.points, vec![(0.5, 0.9), (1.0, 1.0)]);
        assert_eq!(cdf.value_at(0.5), 0.9);
    }

    #[test]
    fn cdf_uniform_is_diagonal() {
        let r = HotnessReport::from_counts((0..8).map(|p| (PageId(p), 3)));
        let cdf = hotness_cdf(&r).unwrap();
        for (x, y) in &cdf.points {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_empty_errors() {
        assert!(hotness_cdf(&HotnessReport::default()).is_err());
    }

    #[test]
    fn combine_is_associative_reduction() {
        let pt = pt();
        let recs: Vec<_> = (0..30).map(|i| AccessRecord::read(i, (i % 10) * 4096)).collect();
        let whole = measure(&recs, &pt, false).unwrap();
        let parts = recs
            .chunks(7)
            .map(|c| measure(c, &pt, false).unwrap())
            .fold(Measurement::empty(), |a, b| a.combine(&b));
        assert_eq!(whole, parts);
    }

    proptest::proptest! {
        #[test]
        fn latency_bounds_and_placement_improvement(
            pages in proptest::collection::vec(0u64..10, 1..200),
            promoted in proptest::collection::btree_set(0u64..10, 0..10),
        ) {
            let mut pt = pt();
            pt.migrate(promoted.iter().map(|&p| PageId(p)), TierId::HostDram).unwrap();
            let recs: Vec<_> = pages.iter().enumerate().map(|(i, &p)| AccessRecord::read(i as u64, p * 4096)).collect();
            let m = measure(&recs, &pt, false).unwrap();
            proptest::prop_assert!(m.avg_latency_ns >= 100.0 && m.avg_latency_ns <= 350.0);
            // moving any accessed CXL page up strictly lowers total time
            if let Some(&p) = pages.iter().find(|p| !promoted.contains(p)) {
                pt.migrate([PageId(p)], TierId::HostDram).unwrap();
                let m2 = measure(&recs, &pt, false).unwrap();
                proptest::prop_assert!(m2.total_time_ns < m.total_time_ns);
            }
        }
    }
}
