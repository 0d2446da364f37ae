use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GroundTruth;
use crate::error::{Error, Result};
use crate::trace::{AccessRecord, Op, PageId, PageSize, DEFAULT_PAGE_SIZE};

/// Access granularity of generated addresses.
pub const CACHELINE: u64 = 64;

const GIB: u64 = 1 << 30;
const MIB: u64 = 1 << 20;

/// Skewed microbenchmark: a contiguous hot prefix of the allocation receives
/// `hot_access_fraction` of all accesses, the rest land uniformly in the
/// cold remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct MmapBenchConfig {
    pub total_bytes: u64,
    pub hot_bytes: u64,
    pub hot_access_fraction: f64,
    pub n_accesses: u64,
    pub seed: u64,
    pub page_size: u64,
    pub tick_ns: u64,
}

impl Default for MmapBenchConfig {
    /// 10 GiB allocation with a 1 GiB hot region taking 90% of accesses.
    fn default() -> Self {
        Self {
            total_bytes: 10 * GIB,
            hot_bytes: GIB,
            hot_access_fraction: 0.9,
            n_accesses: 1_000_000,
            seed: 42,
            page_size: DEFAULT_PAGE_SIZE,
            tick_ns: 1,
        }
    }
}

impl MmapBenchConfig {
    /// Same shape scaled down 1024x: 10 MiB with a 1 MiB hot region.
    pub fn desk() -> Self {
        Self {
            total_bytes: 10 * MIB,
            hot_bytes: MIB,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ps = PageSize::new(self.page_size)?;
        if self.hot_bytes > self.total_bytes {
            return Err(Error::Config(format!(
                "hot_bytes {} exceeds total_bytes {}",
                self.hot_bytes, self.total_bytes
            )));
        }
        if !(0.0..=1.0).contains(&self.hot_access_fraction) {
            return Err(Error::Config(format!(
                "hot_access_fraction {} outside [0, 1]",
                self.hot_access_fraction
            )));
        }
        if !self.total_bytes.is_multiple_of(ps.bytes()) || !self.hot_bytes.is_multiple_of(ps.bytes()) {
            return Err(Error::Config(format!(
                "total_bytes and hot_bytes must be multiples of the page size {}",
                ps.bytes()
            )));
        }
        if self.n_accesses > 0 && self.total_bytes == 0 {
            return Err(Error::Config("accesses requested over an empty allocation".into()));
        }
        if usize::try_from(self.n_accesses).is_err() {
            return Err(Error::Config("n_accesses does not fit in memory".into()));
        }
        Ok(())
    }

    pub fn k(&self) -> u64 {
        self.hot_bytes / self.page_size
    }

    pub fn total_pages(&self) -> u64 {
        self.total_bytes / self.page_size
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            hot_page_set: (0..self.k()).map(PageId).collect::<BTreeSet<_>>(),
        }
    }

    pub fn generate(&self) -> Result<(MmapBenchStream, GroundTruth)> {
        self.validate()?;
        Ok((MmapBenchStream::new(self), self.ground_truth()))
    }
}

pub struct MmapBenchStream {
    rng: ChaCha8Rng,
    index: u64,
    n: u64,
    tick: u64,
    hot_fraction: f64,
    hot_lines: u64,
    cold_lines: u64,
}

impl MmapBenchStream {
    fn new(cfg: &MmapBenchConfig) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            index: 0,
            n: cfg.n_accesses,
            tick: cfg.tick_ns,
            hot_fraction: cfg.hot_access_fraction,
            hot_lines: cfg.hot_bytes.div_ceil(CACHELINE),
            cold_lines: (cfg.total_bytes - cfg.hot_bytes).div_ceil(CACHELINE),
        }
    }
}

impl Iterator for MmapBenchStream {
    type Item = AccessRecord;

    fn next(&mut self) -> Option<AccessRecord> {
        if self.index >= self.n {
            return None;
        }
        let hot = match (self.hot_lines, self.cold_lines) {
            (0, _) => false,
            (_, 0) => true,
            _ => self.rng.random::<f64>() < self.hot_fraction,
        };
        let line = if hot {
            self.rng.random_range(0..self.hot_lines)
        } else {
            self.hot_lines + self.rng.random_range(0..self.cold_lines)
        };
        let rec = AccessRecord::new(self.index * self.tick, line * CACHELINE, Op::Read);
        self.index += 1;
        Some(rec)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = (self.n - self.index) as usize;
        (rest, Some(rest))
    }
}

impl ExactSizeIterator for MmapBenchStream {}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn full_scale_k() {
        let cfg = MmapBenchConfig::default();
        assert_eq!(cfg.k(), 262_144);
        let (_, gt) = MmapBenchConfig { n_accesses: 0, ..cfg }.generate().unwrap();
        assert_eq!(gt.k(), 262_144);
    }

    #[test]
    fn zero_accesses() {
        let cfg = MmapBenchConfig {
            n_accesses: 0,
            ..MmapBenchConfig::desk()
        };
        let (s, gt) = cfg.generate().unwrap();
        assert_eq!(s.count(), 0);
        assert_eq!(gt.k(), 256);
    }

    #[test]
    fn hot_larger_than_total_rejected() {
        let cfg = MmapBenchConfig {
            hot_bytes: 11 * MIB,
            ..MmapBenchConfig::desk()
        };
        assert!(matches!(cfg.generate(), Err(Error::Config(_))));
    }

    #[test]
    fn bad_fraction_rejected() {
        let cfg = MmapBenchConfig {
            hot_access_fraction: 1.5,
            ..MmapBenchConfig::desk()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let cfg = MmapBenchConfig {
            n_accesses: 10_000,
            ..MmapBenchConfig::desk()
        };
        let a: Vec<_> = cfg.generate().unwrap().0.collect();
        let b: Vec<_> = cfg.generate().unwrap().0.collect();
        assert_eq!(a, b);
        let c: Vec<_> = MmapBenchConfig { seed: 7, ..cfg }.generate().unwrap().0.collect();
        assert_ne!(a, c);
    }

    #[test]
    fn desk_hot_fraction_by_brute_force_count() {
        let cfg = MmapBenchConfig::desk();
        let (s, gt) = cfg.generate().unwrap();
        let mut counts: HashMap<u64, u64> = HashMap::new();
        let mut n = 0u64;
        for r in s {
            *counts.entry(r.phys_addr / 4096).or_default() += 1;
            n += 1;
            assert!(r.phys_addr < cfg.total_bytes);
        }
        assert_eq!(n, 1_000_000);
        let hot: u64 = counts
            .iter()
            .filter(|(p, _)| gt.contains(PageId(**p)))
            .map(|(_, c)| c)
            .sum();
        let frac = hot as f64 / n as f64;
        assert!((frac - 0.9).abs() <= 0.003, "hot fraction {frac}");
    }

    #[test]
    fn all_hot_and_all_cold_edges() {
        let all_hot = MmapBenchConfig {
            hot_bytes: 10 * MIB,
            n_accesses: 1000,
            ..MmapBenchConfig::desk()
        };
        assert!(all_hot.generate().unwrap().0.all(|r| r.phys_addr < 10 * MIB));
        let no_hot = MmapBenchConfig {
            hot_bytes: 0,
            n_accesses: 1000,
            ..MmapBenchConfig::desk()
        };
        let (s, gt) = no_hot.generate().unwrap();
        assert_eq!(gt.k(), 0);
        assert_eq!(s.count(), 1000);
    }
}
