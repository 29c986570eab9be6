#ifndef GOTTV_H
#define GOTTV_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum GottvStatus {
  GOTTV_STATUS_OK = 0,
  GOTTV_STATUS_NULL_POINTER = 1,
  GOTTV_STATUS_INVALID_ARGUMENT = 2,
  GOTTV_STATUS_DIMENSION_MISMATCH = 3,
  GOTTV_STATUS_NON_FINITE = 4,
  GOTTV_STATUS_IO = 5,
  GOTTV_STATUS_FORMAT = 6,
  GOTTV_STATUS_NUMERICAL = 7,
  GOTTV_STATUS_PANIC = 8,
} GottvStatus;

/**
 * Restoration models.
 */
typedef enum GottvModel {
  GOTTV_MODEL_GOTTV = 0,
  GOTTV_MODEL_TV = 1,
  GOTTV_MODEL_VTV = 2,
  GOTTV_MODEL_SSAHTV = 3,
  GOTTV_MODEL_ASSTV = 4,
  GOTTV_MODEL_SVTV = 5,
} GottvModel;

/**
 * Opaque list of opponent bases of one dimension.
 */
typedef struct GottvBasisSet GottvBasisSet;

/**
 * Opaque multispectral image.
 */
typedef struct GottvImage GottvImage;

/**
 * Restoration parameters. Start from [`gottv_restore_options_default`].
 *
 * `model` holds a `GottvModel` value. `sigma = 0` means pure denoising;
 * otherwise a Gaussian blur of that width is assumed. `max_iter = 0`
 * selects the default for the task.
 */
typedef struct GottvRestoreOptions {
  uint32_t model;
  double lambda;
  double alpha;
  double mu;
  double sigma;
  size_t max_iter;
  double rel_tol;
} GottvRestoreOptions;

/**
 * Solver diagnostics.
 */
typedef struct GottvRestoreInfo {
  size_t iterations;
  double final_relerr;
  double seconds;
  bool converged;
} GottvRestoreInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or `NULL` if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *gottv_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gottv_version(void);

/**
 * Creates an image. `data` may be `NULL` for an all-zero image; otherwise it
 * must hold `rows * cols * channels` finite values.
 *
 * # Safety
 * `data`, if non-null, must point to that many readable doubles; `out` must
 * be writable.
 */
enum GottvStatus gottv_image_new(size_t rows,
                                 size_t cols,
                                 size_t channels,
                                 const double *data,
                                 struct GottvImage **out);

/**
 * Releases an image.
 *
 * # Safety
 * `image` must come from this library and not be used afterwards.
 */
void gottv_image_free(struct GottvImage *image);

/**
 * Writes the dimensions of `image`. Any output pointer may be `NULL`.
 *
 * # Safety
 * `image` must be a live handle; non-null outputs must be writable.
 */
enum GottvStatus gottv_image_dims(const struct GottvImage *image,
                                  size_t *rows,
                                  size_t *cols,
                                  size_t *channels);

/**
 * Borrowed pointer to the `rows * cols * channels` values of `image`,
 * valid while the handle lives. `NULL` if `image` is `NULL`.
 *
 * # Safety
 * `image` must be a live handle or `NULL`.
 */
const double *gottv_image_data(const struct GottvImage *image);

/**
 * Reads an MSIRAW01 file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GottvStatus gottv_image_read(const char *path, struct GottvImage **out);

/**
 * Writes an MSIRAW01 file with 32- or 64-bit samples (`bits` is 32 or 64).
 *
 * # Safety
 * `image` must be a live handle; `path` a NUL-terminated string.
 */
enum GottvStatus gottv_image_write(const struct GottvImage *image, const char *path, uint32_t bits);

/**
 * Blurs `clean` with a Gaussian of width `sigma` (0 for none) and adds
 * seeded white Gaussian noise of standard deviation `noise_std`.
 *
 * # Safety
 * `clean` must be a live handle; `out` must be writable.
 */
enum GottvStatus gottv_degrade(const struct GottvImage *clean,
                               double sigma,
                               double noise_std,
                               uint64_t seed,
                               struct GottvImage **out);

/**
 * Defaults matching the command-line tool.
 */
struct GottvRestoreOptions gottv_restore_options_default(void);

/**
 * Restores `observed`. `info` may be `NULL`.
 *
 * # Safety
 * `observed` must be a live handle, `options` readable, `out` writable and
 * `info`, if non-null, writable.
 */
enum GottvStatus gottv_restore(const struct GottvImage *observed,
                               const struct GottvRestoreOptions *options,
                               struct GottvImage **out,
                               struct GottvRestoreInfo *info);

/**
 * Mean per-channel PSNR in dB (peak 1). Identical images give infinity.
 *
 * # Safety
 * Both images must be live handles; `out` must be writable.
 */
enum GottvStatus gottv_mpsnr(const struct GottvImage *reference,
                             const struct GottvImage *test,
                             double *out);

/**
 * Mean per-channel SSIM.
 *
 * # Safety
 * Both images must be live handles; `out` must be writable.
 */
enum GottvStatus gottv_mssim(const struct GottvImage *reference,
                             const struct GottvImage *test,
                             double *out);

/**
 * All canonical opponent bases of dimension `d` (`d! / 2` of them).
 *
 * # Safety
 * `out` must be writable.
 */
enum GottvStatus gottv_basis_enumerate(size_t d, struct GottvBasisSet **out);

/**
 * Number of bases in `set` (0 for `NULL`).
 *
 * # Safety
 * `set` must be a live handle or `NULL`.
 */
size_t gottv_basis_set_len(const struct GottvBasisSet *set);

/**
 * Copies basis `index` into `matrix` as `d * d` row-major values and, if
 * `permutation` is non-null, its zero-based column permutation (`d` values).
 *
 * # Safety
 * `set` must be a live handle; `matrix` must have room for `d * d` doubles
 * and `permutation`, if non-null, for `d` values.
 */
enum GottvStatus gottv_basis_set_get(const struct GottvBasisSet *set,
                                     size_t index,
                                     double *matrix,
                                     size_t *permutation);

/**
 * Releases a basis set.
 *
 * # Safety
 * `set` must come from this library and not be used afterwards.
 */
void gottv_basis_set_free(struct GottvBasisSet *set);

/**
 * Checks whether a row-major `d x d` matrix is an opponent transform.
 * Writes 1 to `valid` if it is, 0 otherwise.
 *
 * # Safety
 * `matrix` must hold `d * d` readable doubles; `valid` must be writable.
 */
enum GottvStatus gottv_basis_verify(const double *matrix, size_t d, int32_t *valid);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GOTTV_H */
