/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#ifndef MEMTIER_H
#define MEMTIER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. Values 2 to 6 match the `memtier` binary's exit codes.
typedef enum MtStatus {
  MT_STATUS_OK = 0,
  MT_STATUS_ERROR = 1,
  MT_STATUS_CONFIG = 2,
  MT_STATUS_IO = 3,
  MT_STATUS_CODEC = 4,
  MT_STATUS_CAPACITY = 5,
  MT_STATUS_COMPARISON = 6,
  MT_STATUS_NULL_ARGUMENT = 7,
  MT_STATUS_OUT_OF_RANGE = 8,
  MT_STATUS_PANIC = 9,
} MtStatus;

typedef enum MtEncoding {
  MT_ENCODING_RAW16 = 0,
  MT_ENCODING_VARLEN = 1,
} MtEncoding;

// Opaque decoded trace.
typedef struct MtTrace MtTrace;

// One access. `op` is 0 for a read and 1 for a write.
typedef struct MtRecord {
  uint64_t timestamp_ns;
  uint64_t phys_addr;
  uint8_t op;
} MtRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer is
// valid until the next library call on the same thread.
const char *mt_last_error(void);

// Library version as a static NUL-terminated string.
const char *mt_version(void);

// Generates the workload described by `config_text` (NULL for defaults).
//
// # Safety
// `config_text` is NULL or a NUL-terminated string; `out` is writable.
enum MtStatus mt_trace_generate(const char *config_text, struct MtTrace **out);

// Decodes a binary log.
//
// # Safety
// `bytes` points to `len` readable bytes; `out` is writable.
enum MtStatus mt_trace_decode(const uint8_t *bytes, size_t len, struct MtTrace **out);

// Encodes a trace with an [`MtEncoding`] value. Release the buffer with
// [`mt_bytes_free`].
//
// # Safety
// `trace` is a live handle; `out_bytes` and `out_len` are writable.
enum MtStatus mt_trace_encode(const struct MtTrace *trace,
                              uint32_t encoding,
                              uint8_t **out_bytes,
                              size_t *out_len);

// Releases a buffer from [`mt_trace_encode`]. NULL is a no-op.
//
// # Safety
// `bytes` and `len` come from one [`mt_trace_encode`] call.
void mt_bytes_free(uint8_t *bytes, size_t len);

// Number of records, or 0 for NULL.
//
// # Safety
// `trace` is NULL or a live handle.
size_t mt_trace_len(const struct MtTrace *trace);

// Page size the trace was generated or encoded with, or 0 for NULL.
//
// # Safety
// `trace` is NULL or a live handle.
uint64_t mt_trace_page_size(const struct MtTrace *trace);

// Copies record `index` into `out`.
//
// # Safety
// `trace` is a live handle; `out` is writable.
enum MtStatus mt_trace_get(const struct MtTrace *trace, size_t index, struct MtRecord *out);

// Releases a trace. NULL is a no-op.
//
// # Safety
// `trace` is NULL or a handle not yet freed.
void mt_trace_free(struct MtTrace *trace);

// Page number of `addr` under a power-of-two `page_size`.
//
// # Safety
// `out` is writable.
enum MtStatus mt_page_of(uint64_t addr, uint64_t page_size, uint64_t *out);

// `t_base / t_new`; both must be positive.
//
// # Safety
// `out` is writable.
enum MtStatus mt_speedup(double t_base, double t_new, double *out);

// Runs the experiment in `config_text` and returns the JSON report the
// `tier` command would print. Release it with [`mt_string_free`].
//
// # Safety
// `config_text` is NULL or a NUL-terminated string; `out_json` is writable.
enum MtStatus mt_experiment_run(const char *config_text, char **out_json);

// Releases a string from [`mt_experiment_run`]. NULL is a no-op.
//
// # Safety
// `s` is NULL or came from this library and was not freed yet.
void mt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEMTIER_H */
