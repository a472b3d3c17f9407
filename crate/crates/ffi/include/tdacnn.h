#ifndef TDACNN_H
#define TDACNN_H

/* Generated by cbindgen. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum TdaStatus {
  TDA_STATUS_OK = 0,
  TDA_STATUS_NULL_POINTER = 1,
  TDA_STATUS_INVALID_ARGUMENT = 2,
  TDA_STATUS_INVALID_CONFIG = 3,
  TDA_STATUS_NON_FINITE = 4,
  TDA_STATUS_IO = 5,
  TDA_STATUS_PARSE = 6,
  TDA_STATUS_PANIC = 7,
} TdaStatus;

/**
 * Pipeline configuration.
 */
typedef struct TdaConfig TdaConfig;

/**
 * Dimension-0 and dimension-1 persistence diagrams of one image.
 */
typedef struct TdaDiagrams TdaDiagrams;

/**
 * Grayscale image with intensities in `[0, 1]`.
 */
typedef struct TdaImage TdaImage;

/**
 * Trained classifier together with the configuration it was built from.
 */
typedef struct TdaModel TdaModel;

/**
 * Three-channel persistence image.
 */
typedef struct TdaPersistenceImage TdaPersistenceImage;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL after a
 * success. The pointer stays valid until the next call into this library.
 */
const char *tda_last_error_message(void);

/**
 * Default configuration.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum TdaStatus tda_config_default(struct TdaConfig **out);

/**
 * Configuration parsed from a JSON document; omitted fields take defaults.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TdaStatus tda_config_from_json(const char *json, struct TdaConfig **out);

/**
 * # Safety
 * `cfg` must be NULL or a handle returned by this library, freed at most once.
 */
void tda_config_free(struct TdaConfig *cfg);

/**
 * Image from `height * width` row-major intensities in `[0, 1]`.
 *
 * # Safety
 * `pixels` must point to `height * width` readable doubles.
 */
enum TdaStatus tda_image_new(size_t height,
                             size_t width,
                             const double *pixels,
                             struct TdaImage **out);

/**
 * Image read from a PGM (P2/P5) or `IMG v1` text file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TdaStatus tda_image_load(const char *path, struct TdaImage **out);

/**
 * # Safety
 * `image` must be a live handle; `height` and `width` valid pointers.
 */
enum TdaStatus tda_image_size(const struct TdaImage *image, size_t *height, size_t *width);

/**
 * # Safety
 * `image` must be NULL or a handle returned by this library, freed at most once.
 */
void tda_image_free(struct TdaImage *image);

/**
 * Persistence diagrams of an image under the given configuration.
 *
 * # Safety
 * `cfg` and `image` must be live handles and `out` a valid pointer.
 */
enum TdaStatus tda_diagrams_compute(const struct TdaConfig *cfg,
                                    const struct TdaImage *image,
                                    struct TdaDiagrams **out);

/**
 * Number of points in the diagram of dimension `dim` (0 or 1).
 *
 * # Safety
 * `diagrams` must be a live handle and `len` a valid pointer.
 */
enum TdaStatus tda_diagrams_len(const struct TdaDiagrams *diagrams, uint32_t dim, size_t *len);

/**
 * Birth and death of point `index`. Essential classes have an infinite
 * death in dimension 0 and a death equal to the filtration cap in dimension 1.
 *
 * # Safety
 * `diagrams` must be a live handle; `birth` and `death` valid pointers.
 */
enum TdaStatus tda_diagrams_point(const struct TdaDiagrams *diagrams,
                                  uint32_t dim,
                                  size_t index,
                                  double *birth,
                                  double *death);

/**
 * # Safety
 * `diagrams` must be NULL or a handle returned by this library, freed at most once.
 */
void tda_diagrams_free(struct TdaDiagrams *diagrams);

/**
 * Three-channel persistence image of a pair of diagrams.
 *
 * # Safety
 * `cfg` and `diagrams` must be live handles and `out` a valid pointer.
 */
enum TdaStatus tda_pi_compute(const struct TdaConfig *cfg,
                              const struct TdaDiagrams *diagrams,
                              struct TdaPersistenceImage **out);

/**
 * Height, width and channel count of a persistence image.
 *
 * # Safety
 * `pi` must be a live handle; the size pointers must be valid.
 */
enum TdaStatus tda_pi_shape(const struct TdaPersistenceImage *pi,
                            size_t *height,
                            size_t *width,
                            size_t *channels);

/**
 * Copies the values channel-major (channel, row, column) into `buf`, which
 * must hold exactly `height * width * channels` doubles.
 *
 * # Safety
 * `pi` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum TdaStatus tda_pi_copy(const struct TdaPersistenceImage *pi, double *buf, size_t len);

/**
 * # Safety
 * `pi` must be NULL or a handle returned by this library, freed at most once.
 */
void tda_pi_free(struct TdaPersistenceImage *pi);

/**
 * Classifier for `image_height x image_width` inputs with weights read from
 * a checkpoint file. The architecture comes from the configuration.
 *
 * # Safety
 * `cfg` must be a live handle, `checkpoint_path` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum TdaStatus tda_model_load(const struct TdaConfig *cfg,
                              const char *checkpoint_path,
                              size_t image_height,
                              size_t image_width,
                              struct TdaModel **out);

/**
 * Predicted class of an image. Persistence is computed internally when the
 * model uses the topological branch.
 *
 * # Safety
 * `model` and `image` must be live handles and `class_out` a valid pointer.
 */
enum TdaStatus tda_model_predict(const struct TdaModel *model,
                                 const struct TdaImage *image,
                                 size_t *class_out);

/**
 * # Safety
 * `model` must be NULL or a handle returned by this library, freed at most once.
 */
void tda_model_free(struct TdaModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TDACNN_H */
