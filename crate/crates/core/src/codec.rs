//! Binary request-log format (`.mrl`).
//!
//! ```text
//! offset  size  field
//!      0     4  magic "MRL1"
//!      4     4  page_size (u32 LE)
//!      8     1  encoding: 0 = RAW16, 1 = VARLEN
//!      9     7  reserved, zero
//!     16     8  record_count (u64 LE)
//!     24     -  body
//! ```
//!
//! RAW16 records are two little-endian words: the timestamp, then the
//! address with bit 0 replaced by the op (0 = read, 1 = write). Address bit 0
//! is therefore not representable and RAW16 rejects odd addresses.
//!
//! VARLEN records are a control byte (bit 0 = op, other bits zero), the
//! ULEB128 timestamp delta from the previous record (the first record is a
//! delta from zero) and the ULEB128 absolute address.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::trace::{AccessRecord, Op, PageSize};

pub const MAGIC: [u8; 4] = *b"MRL1";
pub const HEADER_LEN: usize = 24;
pub const RAW16_RECORD_LEN: usize = 16;
pub const FILE_EXTENSION: &str = "mrl";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Raw16,
    Varlen,
}

impl Encoding {
    pub fn tag(self) -> u8 {
        match self {
            Encoding::Raw16 => 0,
            Encoding::Varlen => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Encoding::Raw16),
            1 => Ok(Encoding::Varlen),
            t => Err(Error::Format(format!("unknown record encoding {t}"))),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw16" => Ok(Encoding::Raw16),
            "varlen" => Ok(Encoding::Varlen),
            other => Err(Error::Config(format!("unknown encoding {other:?} (raw16|varlen)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Encoding::Raw16 => "raw16",
            Encoding::Varlen => "varlen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogHeader {
    pub page_size: u32,
    pub encoding: Encoding,
    pub record_count: u64,
}

impl LogHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..8].copy_from_slice(&self.page_size.to_le_bytes());
        b[8] = self.encoding.tag();
        b[16..24].copy_from_slice(&self.record_count.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; HEADER_LEN]) -> Result<Self> {
        if b[0..4] != MAGIC {
            return Err(Error::Format(format!("bad magic {:02x?}", &b[0..4])));
        }
        let page_size = u32::from_le_bytes(b[4..8].try_into().unwrap());
        PageSize::new(page_size as u64)
            .map_err(|_| Error::Format(format!("invalid page size {page_size} in header")))?;
        let encoding = Encoding::from_tag(b[8])?;
        if b[9..16].iter().any(|&x| x != 0) {
            return Err(Error::Format("reserved header bytes are not zero".into()));
        }
        let record_count = u64::from_le_bytes(b[16..24].try_into().unwrap());
        Ok(Self {
            page_size,
            encoding,
            record_count,
        })
    }
}

pub fn write_uleb128<W: Write>(out: &mut W, mut value: u64) -> io::Result<usize> {
    let mut buf = [0u8; 10];
    let mut n = 0;
    loop {
        let byte = (value & 0x7f) as u8;
        value >>= 7;
        if value == 0 {
            buf[n] = byte;
            n += 1;
            break;
        }
        buf[n] = byte | 0x80;
        n += 1;
    }
    out.write_all(&buf[..n])?;
    Ok(n)
}

/// Reads one ULEB128 value. `Ok(None)` means clean EOF before the first byte.
fn read_uleb128<R: Read>(input: &mut R) -> io::Result<Option<u64>> {
    let mut result = 0u64;
    let mut shift = 0u32;
    let mut first = true;
    loop {
        let mut byte = [0u8; 1];
        if input.read(&mut byte)? == 0 {
            return if first {
                Ok(None)
            } else {
                Err(io::ErrorKind::UnexpectedEof.into())
            };
        }
        first = false;
        let b = byte[0];
        if shift == 63 && b > 1 {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "ULEB128 overflows u64"));
        }
        result |= ((b & 0x7f) as u64) << shift;
        if b & 0x80 == 0 {
            return Ok(Some(result));
        }
        shift += 7;
        if shift > 63 {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "ULEB128 overflows u64"));
        }
    }
}

/// Streaming encoder. The record count is part of the header, so it must be
/// declared up front; [`LogWriter::finish`] checks it was honored.
pub struct LogWriter<W: Write> {
    out: W,
    header: LogHeader,
    written: u64,
    prev_ts: u64,
    bytes: u64,
}

impl<W: Write> LogWriter<W> {
    pub fn new(mut out: W, page_size: PageSize, encoding: Encoding, record_count: u64) -> Result<Self> {
        let page_size = u32::try_from(page_size.bytes())
            .map_err(|_| Error::Config("page size does not fit the 32-bit header field".into()))?;
        let header = LogHeader {
            page_size,
            encoding,
            record_count,
        };
        out.write_all(&header.to_bytes()).map_err(|e| Error::io("<log>", e))?;
        Ok(Self {
            out,
            header,
            written: 0,
            prev_ts: 0,
            bytes: HEADER_LEN as u64,
        })
    }

    pub fn push(&mut self, r: &AccessRecord) -> Result<()> {
        let index = self.written;
        if index >= self.header.record_count {
            return Err(Error::Encode {
                index,
                reason: format!("more records than the declared {}", self.header.record_count),
            });
        }
        if index > 0 && r.timestamp_ns < self.prev_ts {
            return Err(Error::Encode {
                index,
                reason: format!("timestamp {} precedes {}", r.timestamp_ns, self.prev_ts),
            });
        }
        let op_bit = u64::from(r.op == Op::Write);
        let io_err = |e| Error::io("<log>", e);
        match self.header.encoding {
            Encoding::Raw16 => {
                if r.phys_addr & 1 != 0 {
                    return Err(Error::Encode {
                        index,
                        reason: format!("odd address {:#x} is not representable in RAW16", r.phys_addr),
                    });
                }
                let mut rec = [0u8; RAW16_RECORD_LEN];
                rec[..8].copy_from_slice(&r.timestamp_ns.to_le_bytes());
                rec[8..].copy_from_slice(&(r.phys_addr | op_bit).to_le_bytes());
                self.out.write_all(&rec).map_err(io_err)?;
                self.bytes += RAW16_RECORD_LEN as u64;
            }
            Encoding::Varlen => {
                self.out.write_all(&[op_bit as u8]).map_err(io_err)?;
                let a = write_uleb128(&mut self.out, r.timestamp_ns - self.prev_ts).map_err(io_err)?;
                let b = write_uleb128(&mut self.out, r.phys_addr).map_err(io_err)?;
                self.bytes += 1 + a as u64 + b as u64;
            }
        }
        self.prev_ts = r.timestamp_ns;
        self.written += 1;
        Ok(())
    }

    /// Returns the sink without checking the declared count, for callers that
    /// only want a prefix of the encoding.
    pub fn into_sink(self) -> W {
        self.out
    }

    /// Flushes and returns the sink plus the total number of bytes written.
    pub fn finish(mut self) -> Result<(W, u64)> {
        if self.written != self.header.record_count {
            return Err(Error::Encode {
                index: self.written,
                reason: format!(
                    "declared {} records but wrote {}",
                    self.header.record_count, self.written
                ),
            });
        }
        self.out.flush().map_err(|e| Error::io("<log>", e))?;
        Ok((self.out, self.bytes))
    }
}

/// Encodes a whole trace into a byte vector.
pub fn encode_log(records: &[AccessRecord], page_size: PageSize, encoding: Encoding) -> Result<Vec<u8>> {
    let cap = HEADER_LEN
        + match encoding {
            Encoding::Raw16 => RAW16_RECORD_LEN * records.len(),
            Encoding::Varlen => 4 * records.len(),
        };
    let mut w = LogWriter::new(Vec::with_capacity(cap), page_size, encoding, records.len() as u64)?;
    for r in records {
        w.push(r)?;
    }
    Ok(w.finish()?.0)
}

/// Streaming decoder; yields exactly `header.record_count` records.
pub struct LogReader<R: Read> {
    input: R,
    header: LogHeader,
    decoded: u64,
    prev_ts: u64,
    failed: bool,
}

impl<R: Read> LogReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        let mut hdr = [0u8; HEADER_LEN];
        input.read_exact(&mut hdr).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Format("input shorter than the log header".into()),
            _ => Error::io("<log>", e),
        })?;
        let header = LogHeader::from_bytes(&hdr)?;
        Ok(Self {
            input,
            header,
            decoded: 0,
            prev_ts: 0,
            failed: false,
        })
    }

    pub fn header(&self) -> &LogHeader {
        &self.header
    }

    pub fn page_size(&self) -> PageSize {
        PageSize::new(self.header.page_size as u64).expect("validated in header")
    }

    pub fn decoded(&self) -> u64 {
        self.decoded
    }

    fn truncated(&self) -> Error {
        Error::Truncated {
            decoded: self.decoded,
            expected: self.header.record_count,
        }
    }

    fn map_io(&self, e: io::Error) -> Error {
        match e.kind() {
            io::ErrorKind::UnexpectedEof => self.truncated(),
            io::ErrorKind::InvalidData => Error::Format(format!("record {}: {e}", self.decoded)),
            _ => Error::io("<log>", e),
        }
    }

    fn next_record(&mut self) -> Result<AccessRecord> {
        match self.header.encoding {
            Encoding::Raw16 => {
                let mut rec = [0u8; RAW16_RECORD_LEN];
                self.input.read_exact(&mut rec).map_err(|e| self.map_io(e))?;
                let ts = u64::from_le_bytes(rec[..8].try_into().unwrap());
                let word = u64::from_le_bytes(rec[8..].try_into().unwrap());
                let op = if word & 1 == 1 { Op::Write } else { Op::Read };
                Ok(AccessRecord::new(ts, word & !1, op))
            }
            Encoding::Varlen => {
                let mut ctl = [0u8; 1];
                self.input.read_exact(&mut ctl).map_err(|e| self.map_io(e))?;
                if ctl[0] & !1 != 0 {
                    return Err(Error::Format(format!(
                        "record {}: reserved control bits set ({:#04x})",
                        self.decoded, ctl[0]
                    )));
                }
                let delta = read_uleb128(&mut self.input)
                    .map_err(|e| self.map_io(e))?
                    .ok_or_else(|| self.truncated())?;
                let addr = read_uleb128(&mut self.input)
                    .map_err(|e| self.map_io(e))?
                    .ok_or_else(|| self.truncated())?;
                let ts = self
                    .prev_ts
                    .checked_add(delta)
                    .ok_or_else(|| Error::Format(format!("record {}: timestamp overflows u64", self.decoded)))?;
                let op = if ctl[0] & 1 == 1 { Op::Write } else { Op::Read };
                Ok(AccessRecord::new(ts, addr, op))
            }
        }
    }

    /// Remaining input after the declared records; used to reject trailing bytes.
    pub fn into_inner(self) -> R {
        self.input
    }
}

impl<R: Read> Iterator for LogReader<R> {
    type Item = Result<AccessRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.decoded >= self.header.record_count {
            return None;
        }
        match self.next_record() {
            Ok(r) => {
                self.prev_ts = r.timestamp_ns;
                self.decoded += 1;
                Some(Ok(r))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = (self.header.record_count - self.decoded) as usize;
        (0, Some(rest))
    }
}

/// Decodes a complete in-memory log, rejecting trailing bytes.
pub fn decode_log(bytes: &[u8]) -> Result<(LogHeader, Vec<AccessRecord>)> {
    let mut reader = LogReader::new(bytes)?;
    let header = *reader.header();
    let mut out = Vec::with_capacity(header.record_count.min(1 << 24) as usize);
    for r in reader.by_ref() {
        out.push(r?);
    }
    let rest = reader.into_inner();
    if !rest.is_empty() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last record",
            rest.len()
        )));
    }
    Ok((header, out))
}
