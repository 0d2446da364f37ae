//! Independent oracles for the trackers and generators, run on the desk
//! workloads.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use memtier::address_space::{PageTable, TierId, TierSpec};
use memtier::config::{RunConfig, MMAP_BENCH_DESK};
use memtier::telemetry::{HmuTracker, HotnessTracker, NbParams, NbScanner, PebsParams, PebsSampler};
use memtier::workload::{expected_touched_fraction, DlrmConfig, MmapBenchConfig, WorkloadConfig};
use memtier::{AccessRecord, PageId, PageSize};

fn desk_trace() -> Vec<AccessRecord> {
    MmapBenchConfig::desk().generate().unwrap().0.collect()
}

fn identity_table(pages: u64) -> (PageTable, std::ops::Range<u64>) {
    let mut pt = PageTable::new(PageSize::default(), TierSpec::host_dram(0), TierSpec::cxl_mem(pages)).unwrap();
    let r = pt.alloc(pages, TierId::CxlMem).unwrap();
    (pt, r)
}

#[test]
fn hmu_equals_hash_count() {
    let recs = desk_trace();
    let mut oracle: HashMap<u64, u64> = HashMap::new();
    for r in &recs {
        *oracle.entry(r.phys_addr >> 12).or_default() += 1;
    }
    let mut hmu = HmuTracker::new(PageSize::default());
    hmu.observe_all(&recs);
    assert_eq!(hmu.counters().len(), oracle.len());
    for (p, c) in hmu.counters() {
        assert_eq!(oracle[&p.0], *c);
    }
    assert_eq!(hmu.report().total_observed, recs.len() as u64);
}

/// Closed-form NB replay: with the cursor advancing W pages per step, the
/// page at cursor offset c is first protected by step floor(c / W) + 1, which
/// fires just before record (floor(c / W) + 1) * T. It faults at its first
/// access at or after that record; later passes cannot add it again.
fn nb_oracle(recs: &[AccessRecord], n: u64, p: NbParams) -> Vec<PageId> {
    if p.iterations == 0 {
        return Vec::new();
    }
    let first_protect = |v: u64| {
        let c = (v + n - p.scan_start_page % n) % n;
        (c / p.scan_window_pages + 1) * p.scan_period
    };
    let mut fault_at: HashMap<u64, u64> = HashMap::new();
    for (i, r) in recs.iter().enumerate() {
        let v = r.phys_addr >> 12;
        if (i as u64) >= first_protect(v) {
            fault_at.entry(v).or_insert(i as u64);
        }
    }
    let mut order: Vec<(u64, u64)> = fault_at.into_iter().map(|(v, i)| (i, v)).collect();
    order.sort_unstable();
    order.into_iter().map(|(_, v)| PageId(v)).collect()
}

#[test]
fn nb_matches_replay_oracle() {
    let recs = desk_trace();
    let n = MmapBenchConfig::desk().total_pages();
    let (pt, range) = identity_table(n);
    let desk = RunConfig::parse(MMAP_BENCH_DESK).unwrap().experiment.telemetry.nb;
    let variants = [
        desk,
        NbParams::default(),
        NbParams {
            scan_period: 97,
            scan_window_pages: 33,
            scan_start_page: 2000,
            iterations: 1,
        },
    ];
    for params in variants {
        for len in [100_000usize, recs.len()] {
            let mut nb = NbScanner::new(params, range.clone()).unwrap();
            for chunk in recs[..len].chunks(4096) {
                nb.step(chunk, &pt);
            }
            assert_eq!(
                nb.faulted(),
                nb_oracle(&recs[..len], n, params).as_slice(),
                "{params:?} len {len}"
            );
        }
    }
}

/// Distinct hot pages among `s` uniform draws over `k`, repeated.
fn coupon_mc(k: u64, s: u64, trials: u32, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..trials)
        .map(|_| {
            let mut seen = HashSet::new();
            for _ in 0..s {
                seen.insert(rng.random_range(0..k));
            }
            seen.len() as f64
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
    (mean, sd)
}

#[test]
fn pebs_distinct_pages_within_three_sigma() {
    let cfg = MmapBenchConfig::desk();
    let recs = desk_trace();
    let (pt, _) = identity_table(cfg.total_pages());
    let mut s = PebsSampler::new(PebsParams::strided(4096, 0)).unwrap();
    s.observe_all(0, &recs, &pt).unwrap();
    let k = cfg.k();
    let hot_samples: u64 = s.report().ranked.iter().filter(|(p, _)| p.0 < k).map(|&(_, c)| c).sum();
    let hot_distinct = s.report().ranked.iter().filter(|(p, _)| p.0 < k).count() as f64;

    let closed = k as f64 * (1.0 - (1.0 - 1.0 / k as f64).powf(hot_samples as f64));
    let (mean, sd) = coupon_mc(k, hot_samples, 4000, 11);
    assert!((mean - closed).abs() < 0.5, "MC mean {mean} vs closed form {closed}");
    assert!(
        (hot_distinct - mean).abs() <= 3.0 * sd,
        "observed {hot_distinct}, expected {mean} +/- {sd} from {hot_samples} samples"
    );
}

/// Inverse-CDF Zipf sampler over ranks 1..=n, independent of the
/// generator's sampling code.
struct ZipfTable {
    cdf: Vec<f64>,
}

impl ZipfTable {
    fn new(n: u64, s: f64) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (1..=n)
            .map(|k| {
                acc += (k as f64).powf(-s);
                acc
            })
            .collect();
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        Self { cdf }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1)
    }
}

#[test]
fn dlrm_distinct_rows_match_monte_carlo() {
    // 2M rows of 256 B, 10^5 lookups per batch, the calibrated exponent.
    let s = DlrmConfig::default().zipf_exponent;
    let cfg = DlrmConfig {
        num_rows: 2_000_000,
        row_bytes: 256,
        batches: 3,
        lookups_per_batch: 100_000,
        zipf_exponent: s,
        profile_batches: 1,
        seed: 42,
        ..DlrmConfig::default()
    };
    let (stream, _) = cfg.generate().unwrap();
    let recs: Vec<AccessRecord> = stream.collect();
    let per_batch = cfg.records_per_batch() as usize;
    let generated: Vec<f64> = recs
        .chunks(per_batch)
        .map(|b| b.iter().map(|r| r.phys_addr / 256).collect::<HashSet<_>>().len() as f64)
        .collect();

    let table = ZipfTable::new(cfg.num_rows, s);
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1);
    let draws: Vec<f64> = (0..40)
        .map(|_| {
            (0..cfg.lookups_per_batch)
                .map(|_| table.sample(&mut rng))
                .collect::<HashSet<_>>()
                .len() as f64
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt();
    for g in &generated {
        assert!((g - mean).abs() <= 3.0 * sd, "generated {g}, MC {mean} +/- {sd}");
    }
    let closed = expected_touched_fraction(cfg.num_rows, cfg.lookups_per_batch, s) * cfg.num_rows as f64;
    assert!(
        (closed - mean).abs() <= 3.0 * sd,
        "closed form {closed}, MC {mean} +/- {sd}"
    );
}

#[test]
fn dlrm_touched_fraction_is_stable() {
    let cfg = DlrmConfig::default();
    assert!(cfg.batches >= 20);
    let (stream, _) = cfg.generate().unwrap();
    let recs: Vec<AccessRecord> = stream.collect();
    let ps = PageSize::new(cfg.page_size).unwrap();
    let fr: Vec<f64> = recs
        .chunks(cfg.records_per_batch() as usize)
        .map(|b| {
            b.iter().map(|r| ps.page_of(r.phys_addr)).collect::<HashSet<_>>().len() as f64 / cfg.table_pages() as f64
        })
        .collect();
    let mean = fr.iter().sum::<f64>() / fr.len() as f64;
    let sd = (fr.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (fr.len() - 1) as f64).sqrt();
    assert!((mean - 0.14).abs() <= 0.02, "mean {mean}");
    assert!(sd / mean < 0.10, "cv {}", sd / mean);
}

#[test]
fn dlrm_ground_truth_is_profile_window() {
    let cfg = DlrmConfig {
        batches: 4,
        profile_batches: 2,
        ..DlrmConfig::default()
    };
    let (stream, gt) = cfg.generate().unwrap();
    let recs: Vec<AccessRecord> = stream.collect();
    let window = 2 * cfg.records_per_batch() as usize;
    let touched: std::collections::BTreeSet<PageId> =
        recs[..window].iter().map(|r| PageId(r.phys_addr >> 12)).collect();
    assert_eq!(gt.hot_page_set, touched);
    assert_eq!(WorkloadConfig::Dlrm(cfg).trace_len().unwrap(), recs.len() as u64);
}
