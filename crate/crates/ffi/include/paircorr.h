#ifndef PAIRCORR_H
#define PAIRCORR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PcStatus {
  PC_STATUS_OK = 0,
  // Null pointer, malformed string or out-of-range argument.
  PC_STATUS_INVALID_ARGUMENT = 1,
  // Work or precision budget exceeded, or an undecidable tie.
  PC_STATUS_BUDGET = 2,
  // The sequence cannot be certified for this operation.
  PC_STATUS_SEQUENCE = 3,
  PC_STATUS_INTERNAL = 4,
} PcStatus;

typedef enum PcAlgorithm {
  PC_ALGORITHM_DIRECT = 0,
  PC_ALGORITHM_SORTED = 1,
} PcAlgorithm;

typedef enum PcCountMode {
  PC_COUNT_MODE_ORACLE = 0,
  PC_COUNT_MODE_FAST = 1,
  PC_COUNT_MODE_WINDOWED = 2,
} PcCountMode;

// Phases `{alpha a(x)}`, `1 <= x <= N`, at 128-bit resolution.
typedef struct PcPhases PcPhases;

// A parsed lacunary sequence.
typedef struct PcSequence PcSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or "" if none. The
// pointer stays valid until the next failing call on the same thread.
const char *pc_last_error(void);

// Library version as a static string.
const char *pc_version(void);

// Parses `geometric:<ratio>`, `exp` or `custom:<path>`.
//
// # Safety
// `spec` must be a valid C string and `out` a valid pointer.
enum PcStatus pc_sequence_new(const char *spec, struct PcSequence **out);

// # Safety
// `seq` must come from [`pc_sequence_new`] and not be used afterwards.
void pc_sequence_free(struct PcSequence *seq);

// Computes the phases of the first `n` terms dilated by `alpha` (decimal or
// `p/q`). `guard_bits` of 0 selects the default guard.
//
// # Safety
// `seq` must be a live handle, `alpha` a valid C string, `out` valid.
enum PcStatus pc_phases_new(const struct PcSequence *seq,
                            const char *alpha,
                            uintptr_t n,
                            uint32_t guard_bits,
                            struct PcPhases **out);

// # Safety
// `phases` must come from [`pc_phases_new`] and not be used afterwards.
void pc_phases_free(struct PcPhases *phases);

// Number of phases, or 0 for a null handle.
//
// # Safety
// `phases` must be null or a live handle.
uintptr_t pc_phases_len(const struct PcPhases *phases);

// Copies the phases as doubles in `[0, 1)` into `buf`, which must hold
// `pc_phases_len` values.
//
// # Safety
// `buf` must be valid for `len` writes.
enum PcStatus pc_phases_copy(const struct PcPhases *phases, double *buf, uintptr_t len);

// `R2` for the indicator window of width `s`.
//
// # Safety
// `phases` must be a live handle and `out` valid.
enum PcStatus pc_r2_window(const struct PcPhases *phases,
                           double s,
                           enum PcAlgorithm algorithm,
                           double *out);

// Smoothed `R2` for a window such as `triangle:1` or `gaussian:0.5`.
//
// # Safety
// `phases` must be a live handle, `window` a valid C string, `out` valid.
enum PcStatus pc_r2_smooth(const struct PcPhases *phases, const char *window, double *out);

// `#{1 <= n <= M, x != y <= N : n |a(x) - a(y)| < K}` with
// `M = floor(N^(1+epsilon))` and `K = N^epsilon`.
//
// # Safety
// `seq` must be a live handle, `epsilon` a valid C string, `out` valid.
enum PcStatus pc_count_a(const struct PcSequence *seq,
                         uintptr_t n,
                         const char *epsilon,
                         enum PcCountMode mode,
                         uint64_t *out);

// Six-tuple count of the variance condition with the same `M` and `K`.
//
// # Safety
// As for [`pc_count_a`].
enum PcStatus pc_count_b(const struct PcSequence *seq,
                         uintptr_t n,
                         const char *epsilon,
                         enum PcCountMode mode,
                         uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAIRCORR_H */
