//! Two-tier physical memory with a virtual page table, reverse mapping and
//! page migration.
//!
//! Virtual pages are handed out contiguously from 0. Physical frames are
//! assigned lowest-free-first in each tier, which keeps runs deterministic
//! and lets the reverse map stay a dense vector.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace::{Op, PageId, PageSize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TierId {
    HostDram,
    CxlMem,
}

impl TierId {
    pub const ALL: [TierId; 2] = [TierId::HostDram, TierId::CxlMem];

    fn index(self) -> usize {
        match self {
            TierId::HostDram => 0,
            TierId::CxlMem => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TierId::HostDram => "host-dram",
            TierId::CxlMem => "cxl-mem",
        }
    }
}

impl fmt::Display for TierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Physical frame number within one tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frame(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TierSpec {
    pub id: TierId,
    pub capacity_pages: u64,
    pub read_latency_ns: u64,
    pub write_latency_ns: u64,
}

impl TierSpec {
    pub const DEFAULT_DRAM_LATENCY_NS: u64 = 100;
    pub const DEFAULT_CXL_LATENCY_NS: u64 = 350;
    /// 256 GB of user-visible device memory at 4 KiB pages.
    pub const DEFAULT_CXL_CAPACITY_PAGES: u64 = 1 << 26;

    pub fn host_dram(capacity_pages: u64) -> Self {
        Self {
            id: TierId::HostDram,
            capacity_pages,
            read_latency_ns: Self::DEFAULT_DRAM_LATENCY_NS,
            write_latency_ns: Self::DEFAULT_DRAM_LATENCY_NS,
        }
    }

    pub fn cxl_mem(capacity_pages: u64) -> Self {
        Self {
            id: TierId::CxlMem,
            capacity_pages,
            read_latency_ns: Self::DEFAULT_CXL_LATENCY_NS,
            write_latency_ns: Self::DEFAULT_CXL_LATENCY_NS,
        }
    }

    pub fn latency(&self, op: Op) -> u64 {
        match op {
            Op::Read => self.read_latency_ns,
            Op::Write => self.write_latency_ns,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.read_latency_ns == 0 || self.write_latency_ns == 0 {
            return Err(Error::Config(format!("{} latencies must be positive", self.id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MigrationStats {
    pub pages_moved: u64,
    pub bytes_moved: u64,
    pub per_page_cost_ns: u64,
}

impl MigrationStats {
    pub fn total_cost_ns(&self) -> u64 {
        self.pages_moved * self.per_page_cost_ns
    }
}

#[derive(Debug, Clone)]
struct TierState {
    spec: TierSpec,
    // frame -> virtual page, grown on demand
    reverse: Vec<Option<PageId>>,
    // frames below the high-water mark that are free again
    freed: BTreeSet<u64>,
    high_water: u64,
    used: u64,
}

impl TierState {
    fn new(spec: TierSpec) -> Self {
        Self {
            spec,
            reverse: Vec::new(),
            freed: BTreeSet::new(),
            high_water: 0,
            used: 0,
        }
    }

    fn free_pages(&self) -> u64 {
        self.spec.capacity_pages - self.used
    }

    fn take_frame(&mut self) -> u64 {
        debug_assert!(self.used < self.spec.capacity_pages);
        self.used += 1;
        if let Some(f) = self.freed.pop_first() {
            return f;
        }
        let f = self.high_water;
        self.high_water += 1;
        if self.reverse.len() < self.high_water as usize {
            self.reverse.resize(self.high_water as usize, None);
        }
        f
    }

    fn release_frame(&mut self, frame: u64) {
        self.reverse[frame as usize] = None;
        self.used -= 1;
        if frame + 1 == self.high_water {
            self.high_water -= 1;
            while self.high_water > 0 && self.freed.remove(&(self.high_water - 1)) {
                self.high_water -= 1;
            }
        } else {
            self.freed.insert(frame);
        }
    }
}

/// Virtual-to-physical page mapping over two tiers.
#[derive(Debug, Clone)]
pub struct PageTable {
    page_size: PageSize,
    // virtual page -> (tier, frame)
    forward: Vec<Option<(TierId, u64)>>,
    tiers: [TierState; 2],
    per_page_cost_ns: u64,
}

impl PageTable {
    pub fn new(page_size: PageSize, host: TierSpec, cxl: TierSpec) -> Result<Self> {
        if host.id != TierId::HostDram || cxl.id != TierId::CxlMem {
            return Err(Error::Config("tier specs passed in the wrong order".into()));
        }
        host.validate()?;
        cxl.validate()?;
        Ok(Self {
            page_size,
            forward: Vec::new(),
            tiers: [TierState::new(host), TierState::new(cxl)],
            per_page_cost_ns: 0,
        })
    }

    pub fn with_migration_cost(mut self, per_page_cost_ns: u64) -> Self {
        self.per_page_cost_ns = per_page_cost_ns;
        self
    }

    pub fn page_size(&self) -> PageSize {
        self.page_size
    }

    pub fn spec(&self, tier: TierId) -> &TierSpec {
        &self.tiers[tier.index()].spec
    }

    pub fn used_pages(&self, tier: TierId) -> u64 {
        self.tiers[tier.index()].used
    }

    pub fn free_pages(&self, tier: TierId) -> u64 {
        self.tiers[tier.index()].free_pages()
    }

    /// Number of virtual pages handed out so far (mapped or not).
    pub fn virtual_pages(&self) -> u64 {
        self.forward.len() as u64
    }

    pub fn mapped_pages(&self) -> u64 {
        self.tiers.iter().map(|t| t.used).sum()
    }

    /// Maps `n_pages` fresh contiguous virtual pages onto frames of `tier`.
    pub fn alloc(&mut self, n_pages: u64, tier: TierId) -> Result<Range<u64>> {
        let free = self.free_pages(tier);
        if n_pages > free {
            return Err(Error::Allocation {
                requested: n_pages,
                shortfall: n_pages - free,
            });
        }
        let start = self.forward.len() as u64;
        self.forward.reserve(n_pages as usize);
        let state = &mut self.tiers[tier.index()];
        for v in start..start + n_pages {
            let frame = state.take_frame();
            state.reverse[frame as usize] = Some(PageId(v));
            self.forward.push(Some((tier, frame)));
        }
        self.debug_check();
        Ok(start..start + n_pages)
    }

    #[inline]
    pub fn forward(&self, page: PageId) -> Option<(TierId, Frame)> {
        self.forward
            .get(page.0 as usize)
            .copied()
            .flatten()
            .map(|(t, f)| (t, Frame(f)))
    }

    #[inline]
    pub fn tier_of(&self, page: PageId) -> Option<TierId> {
        self.forward.get(page.0 as usize).copied().flatten().map(|(t, _)| t)
    }

    /// Virtual page currently backed by `frame` of `tier`.
    pub fn reverse_map(&self, tier: TierId, frame: Frame) -> Result<PageId> {
        self.tiers[tier.index()]
            .reverse
            .get(frame.0 as usize)
            .copied()
            .flatten()
            .ok_or_else(|| Error::Lookup(format!("frame {} of {tier} is not mapped", frame.0)))
    }

    /// Moves `pages` to `dst`. Pages already resident in `dst` are skipped;
    /// either every page that needs to move fits, or nothing moves.
    pub fn migrate<I>(&mut self, pages: I, dst: TierId) -> Result<MigrationStats>
    where
        I: IntoIterator<Item = PageId>,
    {
        let mut seen = BTreeSet::new();
        let mut to_move = Vec::new();
        for p in pages {
            let (tier, _) = self
                .forward(p)
                .ok_or_else(|| Error::Lookup(format!("virtual page {p} is not mapped")))?;
            if tier != dst && seen.insert(p) {
                to_move.push(p);
            }
        }
        let fits = self.free_pages(dst);
        if to_move.len() as u64 > fits {
            return Err(Error::Capacity {
                requested: to_move.len() as u64,
                fits,
            });
        }
        for &p in &to_move {
            let (src, frame) = self.forward[p.0 as usize].expect("checked above");
            self.tiers[src.index()].release_frame(frame);
            let dst_state = &mut self.tiers[dst.index()];
            let new_frame = dst_state.take_frame();
            dst_state.reverse[new_frame as usize] = Some(p);
            self.forward[p.0 as usize] = Some((dst, new_frame));
        }
        self.debug_check();
        let moved = to_move.len() as u64;
        Ok(MigrationStats {
            pages_moved: moved,
            bytes_moved: moved * self.page_size.bytes(),
            per_page_cost_ns: self.per_page_cost_ns,
        })
    }

    /// Checks that forward and reverse are mutual inverses and that frame
    /// accounting matches capacity.
    pub fn check_invariants(&self) -> Result<()> {
        let mut mapped = 0u64;
        for (v, m) in self.forward.iter().enumerate() {
            if let Some((tier, frame)) = m {
                mapped += 1;
                let back = self.tiers[tier.index()].reverse.get(*frame as usize).copied().flatten();
                if back != Some(PageId(v as u64)) {
                    return Err(Error::Lookup(format!("page {v} -> {tier}:{frame} does not map back")));
                }
            }
        }
        let mut reverse_count = 0u64;
        for t in &self.tiers {
            let live = t.reverse.iter().filter(|r| r.is_some()).count() as u64;
            if live != t.used || t.used > t.spec.capacity_pages {
                return Err(Error::Lookup(format!("{} frame accounting is inconsistent", t.spec.id)));
            }
            reverse_count += live;
        }
        if reverse_count != mapped {
            return Err(Error::Lookup("forward and reverse sizes differ".into()));
        }
        Ok(())
    }

    #[inline]
    fn debug_check(&self) {
        #[cfg(debug_assertions)]
        if self.mapped_pages() <= 1 << 16 {
            self.check_invariants().expect("page table invariant violated");
        }
    }
}
