#ifndef QHOLO_H
#define QHOLO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call. Zero is success.
typedef enum QhStatus {
  QH_STATUS_OK = 0,
  QH_STATUS_CONFIG = 1,
  QH_STATUS_DATA = 2,
  QH_STATUS_PARSE = 3,
  QH_STATUS_BOUNDS = 4,
  QH_STATUS_UNDEFINED_STATISTIC = 5,
  QH_STATUS_DETECTION = 6,
  QH_STATUS_INSUFFICIENT_FRINGE = 7,
  QH_STATUS_FIT_NOT_CONVERGED = 8,
  QH_STATUS_IO = 9,
  QH_STATUS_NULL_POINTER = 10,
  QH_STATUS_INVALID_UTF8 = 11,
  QH_STATUS_PANIC = 12,
} QhStatus;

// Phase-correction method for [`qh_reconstruct`].
typedef enum QhMethod {
  QH_METHOD_CONJUGATE_MULTIPLY = 0,
  QH_METHOD_RECENTER = 1,
  QH_METHOD_CALIBRATION_FRAME = 2,
} QhMethod;

// Complex field, row-major.
typedef struct QhField QhField;

// Real-valued frame, row-major.
typedef struct QhFrame QhFrame;

// Time-tag stream of one channel, picoseconds, sorted.
typedef struct QhStream QhStream;

// Fringe-model parameters, see [`qh_fit_fringe`].
typedef struct QhFitParams {
  double y0;
  double amplitude;
  double x0;
  double width;
  double modulation;
  double omega;
  double phi;
  double residual_rms;
  // Nonzero when the modulation is too small for omega and phi to mean
  // anything.
  int32_t degenerate;
} QhFitParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len - 1` bytes) and returns the full message
// length in bytes. Pass `len = 0` to query the length.
//
// # Safety
// `buf` must be valid for `len` bytes or null with `len = 0`.
size_t qh_last_error_message(char *buf, size_t len);

// New stream from `len` tags, which must be nondecreasing.
//
// # Safety
// `tags` must be valid for `len` values; `out` must be writable.
enum QhStatus qh_stream_new(uint8_t channel,
                            const uint64_t *tags,
                            size_t len,
                            struct QhStream **out);

// Reads one channel from a binary or CSV time-tag file. A channel absent
// from the file gives an empty stream.
//
// # Safety
// `file` must be a NUL-terminated string; `out` must be writable.
enum QhStatus qh_stream_read(const char *file, uint8_t channel, struct QhStream **out);

// Number of tags, or 0 for a null handle.
//
// # Safety
// `s` must be null or a live stream handle.
size_t qh_stream_len(const struct QhStream *s);

// # Safety
// `s` must be null or a handle not freed before.
void qh_stream_free(struct QhStream *s);

// Pairs with `2|t_b - offset - t_a| <= window_ps`, each tag used once.
//
// # Safety
// `a` and `b` must be live stream handles; `out` must be writable.
enum QhStatus qh_count_coincidences(const struct QhStream *a,
                                    const struct QhStream *b,
                                    uint64_t window_ps,
                                    int64_t offset_ps,
                                    uint64_t *out);

// Herald tags with a partner in both `a` and `b` within the window.
//
// # Safety
// All stream arguments must be live handles; `out` must be writable.
enum QhStatus qh_count_triples(const struct QhStream *herald,
                               const struct QhStream *a,
                               const struct QhStream *b,
                               uint64_t window_ps,
                               int64_t offset_a_ps,
                               int64_t offset_b_ps,
                               uint64_t *out);

// `g2(0)` and its Poisson standard error from the four counts.
//
// # Safety
// `g2` and `sigma` must be writable.
enum QhStatus qh_g2(uint64_t n1,
                    uint64_t n12,
                    uint64_t n13,
                    uint64_t n123,
                    double *g2,
                    double *sigma);

// New `width × height` frame from row-major values.
//
// # Safety
// `data` must be valid for `width * height` values; `out` must be writable.
enum QhStatus qh_frame_new(size_t width, size_t height, const double *data, struct QhFrame **out);

// Reads a count frame written by the `qholo` command-line tool.
//
// # Safety
// `file` must be a NUL-terminated string; `out` must be writable.
enum QhStatus qh_frame_read_csv(const char *file, struct QhFrame **out);

// # Safety
// `f` must be null or a handle not freed before.
void qh_frame_free(struct QhFrame *f);

// Reconstructs the object field from a hologram frame.
//
// `mask_radius <= 0` picks the default radius. `calibration` may be null
// except with [`QhMethod::CalibrationFrame`]. The located first-order
// bin is written to `order_u`/`order_v` when those are non-null.
//
// # Safety
// Handles must be live or null as described; `out` must be writable.
enum QhStatus qh_reconstruct(const struct QhFrame *frame,
                             enum QhMethod method,
                             int64_t mask_radius,
                             int64_t reference_half_width,
                             const struct QhFrame *calibration,
                             struct QhField **out,
                             int64_t *order_u,
                             int64_t *order_v);

// Field dimensions; zero for a null handle.
//
// # Safety
// `f` must be null or a live handle; `width` and `height` must be writable.
void qh_field_dims(const struct QhField *f, size_t *width, size_t *height);

// Copies the row-major amplitude into `buf`, which must hold
// `width * height` values.
//
// # Safety
// `f` must be a live handle; `buf` must be valid for `len` values.
enum QhStatus qh_field_amplitude(const struct QhField *f, double *buf, size_t len);

// Copies the row-major phase, wrapped to `(-π, π]`, into `buf`.
//
// # Safety
// `f` must be a live handle; `buf` must be valid for `len` values.
enum QhStatus qh_field_phase(const struct QhField *f, double *buf, size_t len);

// # Safety
// `f` must be null or a handle not freed before.
void qh_field_free(struct QhField *f);

// Fringe visibility of a nonnegative profile.
//
// # Safety
// `profile` must be valid for `len` values; `out` must be writable.
enum QhStatus qh_visibility(const double *profile, size_t len, double *out);

// Least-squares fit of the Gaussian-enveloped fringe model to a line.
//
// # Safety
// `line` must be valid for `len` values; `out` must be writable.
enum QhStatus qh_fit_fringe(const double *line, size_t len, struct QhFitParams *out);

// Runs the configured simulation and writes frames, tags and a manifest to
// `out_dir`.
//
// # Safety
// Both arguments must be NUL-terminated strings.
enum QhStatus qh_simulate(const char *config, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QHOLO_H */
