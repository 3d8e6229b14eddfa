#ifndef TTSURROGATE_H
#define TTSURROGATE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum TtsStatus {
  TTS_STATUS_OK = 0,
  TTS_STATUS_INVALID_ARGUMENT = 1,
  TTS_STATUS_INDEX_OUT_OF_RANGE = 2,
  TTS_STATUS_SIZE_LIMIT = 3,
  TTS_STATUS_ZERO_NORM = 4,
  TTS_STATUS_COVERAGE = 5,
  TTS_STATUS_INSUFFICIENT_ROWS = 6,
  TTS_STATUS_NON_FINITE = 7,
  TTS_STATUS_SOLVER_DIVERGED = 8,
  TTS_STATUS_PARSE = 9,
  TTS_STATUS_IO = 10,
  TTS_STATUS_NULL_POINTER = 11,
  TTS_STATUS_PANIC = 12,
} TtsStatus;

/**
 * Opaque first-order ANOVA model.
 */
typedef struct TtsAnova TtsAnova;

/**
 * Opaque tensor train.
 */
typedef struct TtsTensor TtsTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *tts_last_error(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must come from this library or be null.
 */
void tts_string_free(char *s);

/**
 * Random tensor train with ranks `(1, rank, ..., rank, 1)` and N(0, 1) entries.
 *
 * # Safety
 * `dims` must point to `ndim` values; `out` must be writable.
 */
enum TtsStatus tts_tt_random(const size_t *dims,
                             size_t ndim,
                             size_t rank,
                             uint64_t seed,
                             struct TtsTensor **out);

/**
 * Parses the JSON tensor format.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum TtsStatus tts_tt_from_json(const char *json, struct TtsTensor **out);

/**
 * Serializes to JSON; release the string with `tts_string_free`.
 *
 * # Safety
 * `t` must be a live handle; `out` must be writable.
 */
enum TtsStatus tts_tt_to_json(const struct TtsTensor *t, char **out);

/**
 * # Safety
 * `t` must be a live handle or null.
 */
size_t tts_tt_ndim(const struct TtsTensor *t);

/**
 * Copies the `ndim` mode sizes into `out`.
 *
 * # Safety
 * `out` must have room for `len` values.
 */
enum TtsStatus tts_tt_dims(const struct TtsTensor *t, size_t *out, size_t len);

/**
 * Copies the `ndim + 1` ranks into `out`.
 *
 * # Safety
 * `out` must have room for `len` values.
 */
enum TtsStatus tts_tt_ranks(const struct TtsTensor *t, size_t *out, size_t len);

/**
 * Element at a 0-based multi-index.
 *
 * # Safety
 * `idx` must point to `ndim` values; `out` must be writable.
 */
enum TtsStatus tts_tt_get(const struct TtsTensor *t, const size_t *idx, size_t ndim, double *out);

/**
 * Elements at `count` multi-indices.
 *
 * # Safety
 * `idxs` must hold `count * ndim` values and `out` room for `count`.
 */
enum TtsStatus tts_tt_get_many(const struct TtsTensor *t,
                               const size_t *idxs,
                               size_t count,
                               size_t ndim,
                               double *out);

/**
 * # Safety
 * `t` must be a live handle or null; it is invalid afterwards.
 */
void tts_tt_free(struct TtsTensor *t);

/**
 * Fits the first-order ANOVA model to `count` samples.
 *
 * # Safety
 * `idxs` must hold `count * ndim` values, `ys` `count` values and
 * `dims` `ndim` values; `out` must be writable.
 */
enum TtsStatus tts_anova_fit(const size_t *idxs,
                             const double *ys,
                             size_t count,
                             const size_t *dims,
                             size_t ndim,
                             struct TtsAnova **out);

/**
 * # Safety
 * `idx` must point to `ndim` values; `out` must be writable.
 */
enum TtsStatus tts_anova_eval(const struct TtsAnova *a,
                              const size_t *idx,
                              size_t ndim,
                              double *out);

/**
 * Rank-`rank` tensor train of the model. Padding entries of each core are
 * normal with standard deviation `noise_scale` times that core's largest
 * exact entry; a negative `noise_scale` selects the default of 1e-3.
 *
 * # Safety
 * `a` must be a live handle; `out` must be writable.
 */
enum TtsStatus tts_anova_to_tt(const struct TtsAnova *a,
                               size_t rank,
                               double noise_scale,
                               uint64_t seed,
                               struct TtsTensor **out);

/**
 * # Safety
 * `a` must be a live handle or null; it is invalid afterwards.
 */
void tts_anova_free(struct TtsAnova *a);

/**
 * Runs ALS completion from `init`, writing a new tensor to `out` and the
 * final relative training error to `train_error` (if non-null).
 *
 * # Safety
 * `idxs` must hold `count * ndim(init)` values and `ys` `count` values.
 */
enum TtsStatus tts_als_run(const struct TtsTensor *init,
                           const size_t *idxs,
                           const double *ys,
                           size_t count,
                           size_t sweeps,
                           double stop_delta,
                           struct TtsTensor **out,
                           double *train_error);

/**
 * Evaluates a named benchmark at a point `x` of length `d`.
 *
 * # Safety
 * `name` must be nul-terminated; `x` must hold `d` values.
 */
enum TtsStatus tts_benchmark_evaluate(const char *name, const double *x, size_t d, double *out);

/**
 * Integral of the diffusion solution for 9 disk conductivities on an
 * `mesh x mesh` interior grid.
 *
 * # Safety
 * `p` must hold `len` values; `out` must be writable.
 */
enum TtsStatus tts_pde_voi(const double *p, size_t len, size_t mesh, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TTSURROGATE_H */
