//! C ABI over `memtier`.
//!
//! Every fallible call returns an [`MtStatus`]; on failure the message is
//! available from [`mt_last_error`] on the same thread until the next call.
//! Traces are opaque [`MtTrace`] handles owned by the caller and released
//! with [`mt_trace_free`]. Buffers and strings handed out by the library must
//! go back through [`mt_bytes_free`] and [`mt_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use memtier::codec::{decode_log, encode_log, Encoding};
use memtier::config::RunConfig;
use memtier::report::{render_report, RunManifest};
use memtier::tiering::Experiment;
use memtier::{AccessRecord, Error, Op, PageSize};

/// Status codes. Values 2 to 6 match the `memtier` binary's exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtStatus {
    Ok = 0,
    Error = 1,
    Config = 2,
    Io = 3,
    Codec = 4,
    Capacity = 5,
    Comparison = 6,
    NullArgument = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtEncoding {
    Raw16 = 0,
    Varlen = 1,
}

/// One access. `op` is 0 for a read and 1 for a write.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MtRecord {
    pub timestamp_ns: u64,
    pub phys_addr: u64,
    pub op: u8,
}

/// Opaque decoded trace.
pub struct MtTrace {
    records: Vec<AccessRecord>,
    page_size: PageSize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: MtStatus, msg: impl Into<String>) -> MtStatus {
    set_error(msg.into());
    status
}

fn status_of(e: &Error) -> MtStatus {
    match e.exit_code() {
        2 => MtStatus::Config,
        3 => MtStatus::Io,
        4 => MtStatus::Codec,
        5 => MtStatus::Capacity,
        6 => MtStatus::Comparison,
        _ => MtStatus::Error,
    }
}

/// Clears the error slot, runs `f` and converts errors and panics.
fn guard(f: impl FnOnce() -> Result<(), MtStatus>) -> MtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MtStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(MtStatus::Panic, "internal panic"),
    }
}

fn lib(e: Error) -> MtStatus {
    fail(status_of(&e), e.to_string())
}

unsafe fn config_arg(text: *const c_char) -> Result<RunConfig, MtStatus> {
    if text.is_null() {
        return RunConfig::parse("").map_err(lib);
    }
    let s = CStr::from_ptr(text)
        .to_str()
        .map_err(|_| fail(MtStatus::Config, "config text is not UTF-8"))?;
    RunConfig::parse(s).map_err(lib)
}

fn nonnull<T>(p: *const T, what: &str) -> Result<(), MtStatus> {
    if p.is_null() {
        Err(fail(MtStatus::NullArgument, format!("{what} is NULL")))
    } else {
        Ok(())
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn mt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates the workload described by `config_text` (NULL for defaults).
///
/// # Safety
/// `config_text` is NULL or a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mt_trace_generate(config_text: *const c_char, out: *mut *mut MtTrace) -> MtStatus {
    guard(|| {
        nonnull(out, "out")?;
        let cfg = config_arg(config_text)?;
        let w = &cfg.experiment.workload;
        w.validate().map_err(lib)?;
        let page_size = PageSize::new(w.page_size()).map_err(lib)?;
        let (stream, _) = w.generate().map_err(lib)?;
        let t = MtTrace {
            records: stream.collect(),
            page_size,
        };
        *out = Box::into_raw(Box::new(t));
        Ok(())
    })
}

/// Decodes a binary log.
///
/// # Safety
/// `bytes` points to `len` readable bytes; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mt_trace_decode(bytes: *const u8, len: usize, out: *mut *mut MtTrace) -> MtStatus {
    guard(|| {
        nonnull(out, "out")?;
        nonnull(bytes, "bytes")?;
        let data = std::slice::from_raw_parts(bytes, len);
        let (header, records) = decode_log(data).map_err(lib)?;
        let page_size = PageSize::new(u64::from(header.page_size)).map_err(lib)?;
        *out = Box::into_raw(Box::new(MtTrace { records, page_size }));
        Ok(())
    })
}

/// Encodes a trace with an [`MtEncoding`] value. Release the buffer with
/// [`mt_bytes_free`].
///
/// # Safety
/// `trace` is a live handle; `out_bytes` and `out_len` are writable.
#[no_mangle]
pub unsafe extern "C" fn mt_trace_encode(
    trace: *const MtTrace,
    encoding: u32,
    out_bytes: *mut *mut u8,
    out_len: *mut usize,
) -> MtStatus {
    guard(|| {
        nonnull(trace, "trace")?;
        nonnull(out_bytes, "out_bytes")?;
        nonnull(out_len, "out_len")?;
        let t = &*trace;
        let enc = match encoding {
            e if e == MtEncoding::Raw16 as u32 => Encoding::Raw16,
            e if e == MtEncoding::Varlen as u32 => Encoding::Varlen,
            e => return Err(fail(MtStatus::Config, format!("unknown encoding {e}"))),
        };
        let buf = encode_log(&t.records, t.page_size, enc)
            .map_err(lib)?
            .into_boxed_slice();
        *out_len = buf.len();
        *out_bytes = Box::into_raw(buf).cast();
        Ok(())
    })
}

/// Releases a buffer from [`mt_trace_encode`]. NULL is a no-op.
///
/// # Safety
/// `bytes` and `len` come from one [`mt_trace_encode`] call.
#[no_mangle]
pub unsafe extern "C" fn mt_bytes_free(bytes: *mut u8, len: usize) {
    if !bytes.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(bytes, len)));
    }
}

/// Number of records, or 0 for NULL.
///
/// # Safety
/// `trace` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_trace_len(trace: *const MtTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.records.len())
}

/// Page size the trace was generated or encoded with, or 0 for NULL.
///
/// # Safety
/// `trace` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_trace_page_size(trace: *const MtTrace) -> u64 {
    trace.as_ref().map_or(0, |t| t.page_size.bytes())
}

/// Copies record `index` into `out`.
///
/// # Safety
/// `trace` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mt_trace_get(trace: *const MtTrace, index: usize, out: *mut MtRecord) -> MtStatus {
    guard(|| {
        nonnull(trace, "trace")?;
        nonnull(out, "out")?;
        let t = &*trace;
        let r = t.records.get(index).ok_or_else(|| {
            fail(
                MtStatus::OutOfRange,
                format!("record {index} out of range (len {})", t.records.len()),
            )
        })?;
        *out = MtRecord {
            timestamp_ns: r.timestamp_ns,
            phys_addr: r.phys_addr,
            op: u8::from(r.op == Op::Write),
        };
        Ok(())
    })
}

/// Releases a trace. NULL is a no-op.
///
/// # Safety
/// `trace` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mt_trace_free(trace: *mut MtTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Page number of `addr` under a power-of-two `page_size`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mt_page_of(addr: u64, page_size: u64, out: *mut u64) -> MtStatus {
    guard(|| {
        nonnull(out, "out")?;
        let ps = PageSize::new(page_size).map_err(lib)?;
        *out = ps.page_of(addr).0;
        Ok(())
    })
}

/// `t_base / t_new`; both must be positive.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mt_speedup(t_base: f64, t_new: f64, out: *mut f64) -> MtStatus {
    guard(|| {
        nonnull(out, "out")?;
        *out = memtier::perf::speedup(t_base, t_new).map_err(lib)?;
        Ok(())
    })
}

/// Runs the experiment in `config_text` and returns the JSON report the
/// `tier` command would print. Release it with [`mt_string_free`].
///
/// # Safety
/// `config_text` is NULL or a NUL-terminated string; `out_json` is writable.
#[no_mangle]
pub unsafe extern "C" fn mt_experiment_run(config_text: *const c_char, out_json: *mut *mut c_char) -> MtStatus {
    guard(|| {
        nonnull(out_json, "out_json")?;
        let cfg = config_arg(config_text)?;
        let exp = Experiment::prepare(&cfg.experiment).map_err(lib)?;
        let (main, baselines) = exp.run_with_baselines().map_err(lib)?;
        let manifest = RunManifest::new(&cfg, exp.fingerprint());
        let json = render_report(&manifest, &main, &baselines);
        *out_json = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Releases a string from [`mt_experiment_run`]. NULL is a no-op.
///
/// # Safety
/// `s` is NULL or came from this library and was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn mt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
