#ifndef DDIBENCH_H
#define DDIBENCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DdiStatus {
  DDI_STATUS_OK = 0,
  DDI_STATUS_NULL_POINTER = 1,
  DDI_STATUS_INVALID_UTF8 = 2,
  DDI_STATUS_IO = 3,
  DDI_STATUS_INVALID_DATA = 4,
  DDI_STATUS_NOT_FOUND = 5,
  DDI_STATUS_INVALID_ARGUMENT = 6,
  // A Rust panic was caught at the boundary.
  DDI_STATUS_INTERNAL = 7,
} DdiStatus;

typedef enum DdiLabel {
  DDI_LABEL_INVALID = 0,
  DDI_LABEL_INTERACTION = 1,
  DDI_LABEL_NO_INTERACTION = 2,
} DdiLabel;

// Drug catalog as loaded, without eligibility filtering.
typedef struct DdiCatalog DdiCatalog;

// Trained baseline together with the gene index it was trained on.
typedef struct DdiModel DdiModel;

// Metric values; NaN marks an undefined ratio (zero denominator).
typedef struct DdiMetrics {
  double accuracy;
  double precision;
  double sensitivity;
  double specificity;
  double f1;
} DdiMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The caller
// owns the returned string.
char *ddi_last_error(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void ddi_string_free(char *s);

// Library version as a static string; do not free.
const char *ddi_version(void);

// Loads a catalog. `format` is "tabular" or "jsonl".
//
// # Safety
// `path` and `format` must be NUL-terminated strings; `out` must be a valid
// pointer.
enum DdiStatus ddi_catalog_load(const char *path, const char *format, struct DdiCatalog **out);

// Number of drugs in the catalog; 0 for NULL.
//
// # Safety
// `catalog` must be NULL or a live handle.
size_t ddi_catalog_len(const struct DdiCatalog *catalog);

// # Safety
// `catalog` must be NULL or a handle from [`ddi_catalog_load`] not yet freed.
void ddi_catalog_free(struct DdiCatalog *catalog);

// Renders the zero-shot prompt for the directed pair (drug1, drug2).
//
// # Safety
// Pointers must be valid; `out_system` and `out_user` receive strings to
// release with [`ddi_string_free`].
enum DdiStatus ddi_render_prompt(const struct DdiCatalog *catalog,
                                 const char *drug1,
                                 const char *drug2,
                                 char **out_system,
                                 char **out_user);

// Classifies a model answer. NULL or non-UTF-8 input is invalid.
//
// # Safety
// `raw` must be NULL or a NUL-terminated string.
enum DdiLabel ddi_parse_label(const char *raw);

// Computes metrics from confusion counts. Fails when all counts are zero.
//
// # Safety
// `out` must be a valid pointer.
enum DdiStatus ddi_compute_metrics(uint64_t tp,
                                   uint64_t fp,
                                   uint64_t tn,
                                   uint64_t fn_,
                                   struct DdiMetrics *out);

// Loads a trained baseline and the gene list it was trained against (the
// `genes.txt` written by `ingest`, one symbol per line in sorted order).
//
// # Safety
// Paths must be NUL-terminated strings; `out` must be a valid pointer.
enum DdiStatus ddi_model_load(const char *model_path,
                              const char *genes_path,
                              struct DdiModel **out);

// Interaction probability and label for the directed pair (drug1, drug2).
//
// # Safety
// Handles must be live; strings NUL-terminated; outputs valid pointers.
enum DdiStatus ddi_model_predict(const struct DdiModel *model,
                                 const struct DdiCatalog *catalog,
                                 const char *drug1,
                                 const char *drug2,
                                 double *out_probability,
                                 enum DdiLabel *out_label);

// # Safety
// `model` must be NULL or a handle from [`ddi_model_load`] not yet freed.
void ddi_model_free(struct DdiModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDIBENCH_H */
