#ifndef SEA_UNDISTORT_H
#define SEA_UNDISTORT_H

/* Generated by cbindgen from the sea-undistort-ffi crate. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum SuStatus {
  SU_STATUS_OK = 0,
  SU_STATUS_NULL_POINTER = 1,
  SU_STATUS_INVALID_ARGUMENT = 2,
  SU_STATUS_IO = 3,
  SU_STATUS_FORMAT = 4,
  SU_STATUS_DIMENSION_MISMATCH = 5,
  SU_STATUS_NO_OVERLAP = 6,
  SU_STATUS_CONFIG = 7,
  SU_STATUS_BUFFER_TOO_SMALL = 8,
  SU_STATUS_PANIC = 9,
} SuStatus;

// Which image of a pair to access.
typedef enum SuImageKind {
  SU_IMAGE_KIND_CLEAN = 0,
  SU_IMAGE_KIND_DISTORTED = 1,
} SuImageKind;

// A depth raster.
typedef struct SuDsm SuDsm;

// A rendered clean/distorted image pair.
typedef struct SuPair SuPair;

// Sampled scene parameters.
typedef struct SuScene SuScene;

// Depth error statistics of a prediction against a reference raster.
typedef struct SuErrorStats {
  double rmse_m;
  double mae_m;
  double std_m;
  double bias_m;
  uint64_t n;
} SuErrorStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to fit) and returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t su_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *su_version(void);

// Ground sampling distance in meters.
double su_compute_gsd(double altitude_m,
                      double focal_mm,
                      double sensor_width_mm,
                      uint32_t pixel_width);

// Samples scene parameters with the default generator ranges.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum SuStatus su_scene_sample(uint64_t seed, struct SuScene **out);

// Parses a per-image metadata JSON document.
//
// # Safety
// `json` must be a NUL-terminated string; `out` a valid handle slot.
enum SuStatus su_scene_from_json(const char *json, struct SuScene **out);

// Writes the scene's metadata JSON into `buf`.
//
// # Safety
// `scene` must be a live handle; `buf` null or `len` writable bytes;
// `required` null or writable.
enum SuStatus su_scene_to_json(const struct SuScene *scene,
                               char *buf,
                               size_t len,
                               size_t *required);

// GSD of the scene's camera, or NaN for a null handle.
//
// # Safety
// `scene` must be null or a live handle.
double su_scene_gsd(const struct SuScene *scene);

// Mean seabed depth of the scene (negative meters), or NaN for a null handle.
//
// # Safety
// `scene` must be null or a live handle.
double su_scene_depth(const struct SuScene *scene);

// # Safety
// `scene` must be null or a handle not yet freed.
void su_scene_free(struct SuScene *scene);

// Renders the 8-bit clean/distorted pair of a scene.
//
// # Safety
// `scene` must be a live handle; `out` a valid handle slot.
enum SuStatus su_render_pair(const struct SuScene *scene,
                             uint32_t samples_per_pixel,
                             struct SuPair **out);

// # Safety
// `pair` must be null or a live handle.
uint32_t su_pair_width(const struct SuPair *pair);

// # Safety
// `pair` must be null or a live handle.
uint32_t su_pair_height(const struct SuPair *pair);

// Copies one image of the pair as RGB8 into `buf` (`width · height · 3` bytes).
//
// # Safety
// `pair` must be a live handle and `buf` point to `len` writable bytes.
enum SuStatus su_pair_copy_rgb8(const struct SuPair *pair,
                                enum SuImageKind kind,
                                uint8_t *buf,
                                size_t len);

// Writes `<stem>_clean.png`, `<stem>_distorted.png` and `<stem>.json` into `dir`.
//
// # Safety
// `pair` must be a live handle; `dir` and `stem` NUL-terminated strings.
enum SuStatus su_pair_save(const struct SuPair *pair, const char *dir, const char *stem);

// # Safety
// `pair` must be null or a handle not yet freed.
void su_pair_free(struct SuPair *pair);

// Glint mask of an RGB8 image into `mask` (`width · height` floats in `[0, 1]`).
//
// # Safety
// `rgb` must hold `width · height · 3` bytes and `mask` `width · height` floats.
enum SuStatus su_glint_mask_rgb8(const uint8_t *rgb,
                                 uint32_t width,
                                 uint32_t height,
                                 double t_lo,
                                 double t_hi,
                                 float *mask);

// Serializes an RGB8 image and its mask as the planar float32 early-fusion
// tensor. `required` (optional) receives the byte size.
//
// # Safety
// `rgb` must hold `width · height · 3` bytes, `mask` `width · height`
// floats, `out` null or `len` writable bytes, `required` null or writable.
enum SuStatus su_pack_ef_rgb8(const uint8_t *rgb,
                              const float *mask,
                              uint32_t width,
                              uint32_t height,
                              uint8_t *out,
                              size_t len,
                              size_t *required);

// PSNR in dB over all channels; `INFINITY` for identical images.
//
// # Safety
// `a` and `b` must hold `width · height · 3` bytes; `out` must be writable.
enum SuStatus su_psnr_rgb8(const uint8_t *a,
                           const uint8_t *b,
                           uint32_t width,
                           uint32_t height,
                           double *out);

// Mean luminance SSIM (11-px Gaussian window, σ = 1.5).
//
// # Safety
// `a` and `b` must hold `width · height · 3` bytes; `out` must be writable.
enum SuStatus su_ssim_rgb8(const uint8_t *a,
                           const uint8_t *b,
                           uint32_t width,
                           uint32_t height,
                           double *out);

// Variance of the Laplacian of the luma.
//
// # Safety
// `rgb` must hold `width · height · 3` bytes; `out` must be writable.
enum SuStatus su_sharpness_rgb8(const uint8_t *rgb, uint32_t width, uint32_t height, double *out);

// Shannon entropy of the luma histogram, in bits.
//
// # Safety
// `rgb` must hold `width · height · 3` bytes; `out` must be writable.
enum SuStatus su_entropy_rgb8(const uint8_t *rgb, uint32_t width, uint32_t height, double *out);

// Reads a `.dsm` or ESRI ASCII raster.
//
// # Safety
// `path` must be a NUL-terminated string; `out` a valid handle slot.
enum SuStatus su_dsm_read(const char *path, struct SuDsm **out);

// Builds a raster from `width · height` row-major values.
//
// # Safety
// `values` must hold `width · height` floats; `out` a valid handle slot.
enum SuStatus su_dsm_from_values(uint32_t width,
                                 uint32_t height,
                                 double cell_size_m,
                                 const float *values,
                                 float nodata,
                                 struct SuDsm **out);

// # Safety
// `dsm` must be a live handle; `path` a NUL-terminated string.
enum SuStatus su_dsm_write(const struct SuDsm *dsm, const char *path);

// # Safety
// `dsm` must be null or a handle not yet freed.
void su_dsm_free(struct SuDsm *dsm);

// Per-bin cell counts. With `edges` null the default bins 0, −2, …, −20 m
// are used. `counts` receives `n_edges − 1` values (10 for the default).
// `out_of_range` and `nodata` are optional.
//
// # Safety
// `dsm` must be a live handle, `edges` null or `n_edges` doubles, `counts`
// `n_counts` writable values, the remaining outputs null or writable.
enum SuStatus su_dsm_bin_counts(const struct SuDsm *dsm,
                                const double *edges,
                                size_t n_edges,
                                uint64_t *counts,
                                size_t n_counts,
                                uint64_t *out_of_range,
                                uint64_t *nodata);

// Depth error statistics of `pred − reference` over cells valid in both.
//
// # Safety
// `pred` and `reference` must be live handles; `out` writable.
enum SuStatus su_depth_errors(const struct SuDsm *pred,
                              const struct SuDsm *reference,
                              struct SuErrorStats *out);

// Train/val/test sizes for `n` entries (val and test floored, remainder to train).
//
// # Safety
// `out` must point to three writable values.
enum SuStatus su_split_sizes(size_t n, double train, double val, double test, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEA_UNDISTORT_H */
