use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use super::GroundTruth;
use crate::error::{Error, Result};
use crate::trace::{AccessRecord, Op, PageId, PageSize};

/// Sparse embedding-table lookups: each batch reads `lookups_per_batch` rows
/// drawn i.i.d. from a Zipf popularity over row indices (row 0 hottest).
///
/// Defaults come from `configs/dlrm_desk.conf`, which also records the
/// calibrated Zipf exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct DlrmConfig {
    pub num_rows: u64,
    pub row_bytes: u64,
    pub batches: u64,
    pub lookups_per_batch: u64,
    pub zipf_exponent: f64,
    /// Batches whose touched pages form the ground-truth hot set.
    pub profile_batches: u64,
    pub seed: u64,
    pub page_size: u64,
    pub tick_ns: u64,
}

impl Default for DlrmConfig {
    fn default() -> Self {
        crate::config::dlrm_desk_defaults()
    }
}

impl DlrmConfig {
    pub fn table_bytes(&self) -> u64 {
        self.num_rows * self.row_bytes
    }

    pub fn table_pages(&self) -> u64 {
        self.table_bytes().div_ceil(self.page_size)
    }

    /// Pages spanned by every row; rows never straddle a page boundary
    /// unevenly because `row_bytes` divides or is a multiple of the page size.
    pub fn pages_per_row(&self) -> u64 {
        (self.row_bytes / self.page_size).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let ps = PageSize::new(self.page_size)?;
        if self.num_rows == 0 {
            return Err(Error::Config("num_rows must be at least 1".into()));
        }
        if self.row_bytes == 0 || !self.row_bytes.is_multiple_of(4) {
            return Err(Error::Config(format!(
                "row_bytes {} must be a positive multiple of 4",
                self.row_bytes
            )));
        }
        let aligned = if self.row_bytes >= ps.bytes() {
            self.row_bytes.is_multiple_of(ps.bytes())
        } else {
            ps.bytes() % self.row_bytes == 0
        };
        if !aligned {
            return Err(Error::Config(format!(
                "row_bytes {} must divide or be a multiple of the page size {}",
                self.row_bytes,
                ps.bytes()
            )));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return Err(Error::Config(format!(
                "zipf_exponent {} must be >= 0",
                self.zipf_exponent
            )));
        }
        if self.profile_batches > self.batches {
            return Err(Error::Config(format!(
                "profile_batches {} exceeds batches {}",
                self.profile_batches, self.batches
            )));
        }
        self.trace_len()?;
        Ok(())
    }

    pub fn trace_len(&self) -> Result<u64> {
        self.batches
            .checked_mul(self.lookups_per_batch)
            .and_then(|n| n.checked_mul(self.pages_per_row()))
            .filter(|n| usize::try_from(*n).is_ok())
            .ok_or_else(|| Error::Config("DLRM trace length overflows".into()))
    }

    /// Records emitted per batch.
    pub fn records_per_batch(&self) -> u64 {
        self.lookups_per_batch * self.pages_per_row()
    }

    pub fn generate(&self) -> Result<(DlrmStream, GroundTruth)> {
        self.validate()?;
        let profile_len = self.profile_batches * self.records_per_batch();
        let ps = PageSize::new(self.page_size)?;
        let hot_page_set: BTreeSet<PageId> = DlrmStream::new(self)?
            .take(profile_len as usize)
            .map(|r| ps.page_of(r.phys_addr))
            .collect();
        Ok((DlrmStream::new(self)?, GroundTruth { hot_page_set }))
    }
}

pub struct DlrmStream {
    rng: ChaCha8Rng,
    zipf: Zipf<f64>,
    index: u64,
    n: u64,
    tick: u64,
    row_bytes: u64,
    page_size: u64,
    pages_per_row: u64,
    // (row start address, next page offset within the row)
    current: Option<(u64, u64)>,
}

impl DlrmStream {
    fn new(cfg: &DlrmConfig) -> Result<Self> {
        let zipf = Zipf::new(cfg.num_rows as f64, cfg.zipf_exponent)
            .map_err(|e| Error::Config(format!("zipf distribution: {e}")))?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            zipf,
            index: 0,
            n: cfg.trace_len()?,
            tick: cfg.tick_ns,
            row_bytes: cfg.row_bytes,
            page_size: cfg.page_size,
            pages_per_row: cfg.pages_per_row(),
            current: None,
        })
    }

    fn draw_row<R: Rng>(zipf: &Zipf<f64>, rng: &mut R) -> u64 {
        zipf.sample(rng) as u64 - 1
    }
}

impl Iterator for DlrmStream {
    type Item = AccessRecord;

    fn next(&mut self) -> Option<AccessRecord> {
        if self.index >= self.n {
            return None;
        }
        let (start, page) = match self.current {
            Some(cur) => cur,
            None => (Self::draw_row(&self.zipf, &mut self.rng) * self.row_bytes, 0),
        };
        let addr = if page == 0 {
            start
        } else {
            start + page * self.page_size
        };
        self.current = (page + 1 < self.pages_per_row).then_some((start, page + 1));
        let rec = AccessRecord::new(self.index * self.tick, addr, Op::Read);
        self.index += 1;
        Some(rec)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = (self.n - self.index) as usize;
        (rest, Some(rest))
    }
}

impl ExactSizeIterator for DlrmStream {}

/// Expected fraction of rows touched at least once by `lookups` i.i.d. Zipf
/// draws over `num_rows` rows.
pub fn expected_touched_fraction(num_rows: u64, lookups: u64, exponent: f64) -> f64 {
    let weights: Vec<f64> = (1..=num_rows).map(|i| (i as f64).powf(-exponent)).collect();
    let norm: f64 = weights.iter().sum();
    let l = lookups as f64;
    let touched: f64 = weights.iter().map(|w| -(l * (-(w / norm)).ln_1p()).exp_m1()).sum();
    touched / num_rows as f64
}

/// Zipf exponent at which the expected per-batch touched fraction equals
/// `target`, found by bisection (the fraction falls monotonically with the
/// exponent).
pub fn calibrate_zipf_exponent(num_rows: u64, lookups: u64, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0f64, 8.0f64);
    let f = |s| expected_touched_fraction(num_rows, lookups, s) - target;
    if f(lo) < 0.0 || f(hi) > 0.0 {
        return Err(Error::Config(format!(
            "touched fraction {target} unreachable with {lookups} lookups over {num_rows} rows"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
