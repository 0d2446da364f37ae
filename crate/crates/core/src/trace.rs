//! Access records, page identities and the in-memory trace container.
//!
//! Records carry physical addresses, which is all the device-side logger
//! ever sees. Virtual identity is recovered through
//! [`crate::address_space::PageTable::reverse_map`].

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PAGE_SIZE: u64 = 4096;
pub const MIN_PAGE_SIZE: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    Read,
    Write,
}

impl Op {
    pub fn as_char(self) -> char {
        match self {
            Op::Read => 'R',
            Op::Write => 'W',
        }
    }
}

/// One memory request as observed on the memory side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AccessRecord {
    pub timestamp_ns: u64,
    pub phys_addr: u64,
    pub op: Op,
}

impl AccessRecord {
    pub fn new(timestamp_ns: u64, phys_addr: u64, op: Op) -> Self {
        Self {
            timestamp_ns,
            phys_addr,
            op,
        }
    }

    pub fn read(timestamp_ns: u64, phys_addr: u64) -> Self {
        Self::new(timestamp_ns, phys_addr, Op::Read)
    }
}

/// Page number at a fixed page size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PageId(pub u64);

impl fmt::Display for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A validated power-of-two page size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PageSize {
    bytes: u64,
    shift: u32,
}

impl PageSize {
    pub fn new(bytes: u64) -> Result<Self> {
        if bytes < MIN_PAGE_SIZE || !bytes.is_power_of_two() {
            return Err(Error::Config(format!(
                "page size {bytes} must be a power of two >= {MIN_PAGE_SIZE}"
            )));
        }
        Ok(Self {
            bytes,
            shift: bytes.trailing_zeros(),
        })
    }

    pub fn bytes(self) -> u64 {
        self.bytes
    }

    pub fn shift(self) -> u32 {
        self.shift
    }

    #[inline]
    pub fn page_of(self, addr: u64) -> PageId {
        PageId(addr >> self.shift)
    }

    #[inline]
    pub fn base_of(self, page: PageId) -> u64 {
        page.0 << self.shift
    }

    /// Number of pages needed to hold `bytes`, rounded up.
    pub fn pages_for(self, bytes: u64) -> u64 {
        bytes.div_ceil(self.bytes)
    }
}

impl Default for PageSize {
    fn default() -> Self {
        Self {
            bytes: DEFAULT_PAGE_SIZE,
            shift: DEFAULT_PAGE_SIZE.trailing_zeros(),
        }
    }
}

/// Page containing `addr`; fails for page sizes that are not a power of two.
pub fn page_of(addr: u64, page_size: u64) -> Result<PageId> {
    Ok(PageSize::new(page_size)?.page_of(addr))
}

/// Where a trace came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceSource {
    Generator(String),
    File(String),
    Inline,
}

/// A fully materialized trace.
///
/// Generators and the log decoder are lazy iterators; experiments collect
/// into this type so the same records can be replayed by several trackers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    records: Vec<AccessRecord>,
    source: TraceSource,
}

impl Trace {
    pub fn new(records: Vec<AccessRecord>, source: TraceSource) -> Self {
        Self { records, source }
    }

    pub fn from_records(records: Vec<AccessRecord>) -> Self {
        Self::new(records, TraceSource::Inline)
    }

    pub fn records(&self) -> &[AccessRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<AccessRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn source(&self) -> &TraceSource {
        &self.source
    }

    pub fn iter(&self) -> std::slice::Iter<'_, AccessRecord> {
        self.records.iter()
    }

    /// Index of the first record whose timestamp goes backwards, if any.
    pub fn first_non_monotone(&self) -> Option<usize> {
        first_non_monotone(&self.records)
    }

    /// Contiguous chunks for parallel consumers. Chunk order is trace order.
    pub fn chunks(&self, n: usize) -> impl Iterator<Item = &[AccessRecord]> {
        let size = self.records.len().div_ceil(n.max(1)).max(1);
        self.records.chunks(size)
    }
}

impl<'a> IntoIterator for &'a Trace {
    type Item = &'a AccessRecord;
    type IntoIter = std::slice::Iter<'a, AccessRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

pub(crate) fn first_non_monotone(records: &[AccessRecord]) -> Option<usize> {
    records
        .windows(2)
        .position(|w| w[1].timestamp_ns < w[0].timestamp_ns)
        .map(|i| i + 1)
}

pub const CSV_HEADER: &str = "timestamp_ns,phys_addr,op";

/// Writes the debug text form: `timestamp_ns,phys_addr,op` with hex addresses.
pub fn write_csv<'a, W: Write>(mut out: W, records: impl IntoIterator<Item = &'a AccessRecord>) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{},{:#x},{}", r.timestamp_ns, r.phys_addr, r.op.as_char())?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<AccessRecord>> {
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == CSV_HEADER => {}
        Some(Ok(h)) => return Err(Error::Format(format!("unexpected CSV header {h:?}"))),
        Some(Err(e)) => return Err(Error::io("<csv>", e)),
        None => return Err(Error::Format("empty CSV trace".into())),
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io("<csv>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("malformed CSV record on line {}: {line:?}", lineno + 2));
        let mut fields = line.split(',').map(str::trim);
        let ts = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let addr = fields
            .next()
            .and_then(|f| f.strip_prefix("0x").or_else(|| f.strip_prefix("0X")))
            .and_then(|f| u64::from_str_radix(f, 16).ok())
            .ok_or_else(bad)?;
        let op = match fields.next() {
            Some("R") => Op::Read,
            Some("W") => Op::Write,
            _ => return Err(bad()),
        };
        if fields.next().is_some() {
            return Err(bad());
        }
        out.push(AccessRecord::new(ts, addr, op));
    }
    Ok(out)
}
