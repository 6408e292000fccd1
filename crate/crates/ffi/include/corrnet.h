#ifndef CORRNET_H
#define CORRNET_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CorrnetStatus {
  CORRNET_STATUS_OK = 0,
  CORRNET_STATUS_NULL_POINTER = 1,
  CORRNET_STATUS_INVALID_ARGUMENT = 2,
  CORRNET_STATUS_IO = 3,
  CORRNET_STATUS_PARSE = 4,
  CORRNET_STATUS_CONFLICT = 5,
  CORRNET_STATUS_EMPTY_SECTOR = 6,
  CORRNET_STATUS_NUMERICAL = 7,
  CORRNET_STATUS_PANIC = 8,
} CorrnetStatus;

typedef enum CorrnetGraphKind {
  CORRNET_GRAPH_KIND_MST = 0,
  CORRNET_GRAPH_KIND_PMFG = 1,
} CorrnetGraphKind;

/**
 * MST or PMFG.
 */
typedef struct CorrnetGraph CorrnetGraph;

/**
 * Correlation or mode matrix with its tickers.
 */
typedef struct CorrnetMatrix CorrnetMatrix;

/**
 * Community assignment of graph nodes.
 */
typedef struct CorrnetPartition CorrnetPartition;

/**
 * Eigenvalues and eigenvectors of a correlation matrix.
 */
typedef struct CorrnetSpectrum CorrnetSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library from this thread.
 */
const char *corrnet_last_error_message(void);

const char *corrnet_version(void);

/**
 * Correlation matrix from `n * n` row-major values. The matrix must be
 * symmetric with a unit diagonal and entries in [-1, 1].
 *
 * # Safety
 * `values` must point to `n * n` doubles; `out` must be writable.
 */
enum CorrnetStatus corrnet_matrix_from_values(size_t n,
                                              const double *values,
                                              struct CorrnetMatrix **out);

/**
 * Reads a matrix written by the library (or the `corrnet` CLI).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CorrnetStatus corrnet_matrix_read_csv(const char *path, struct CorrnetMatrix **out);

/**
 * Equal-time correlation matrix of the log returns over `dt` steps of a
 * wide, comma-separated price file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CorrnetStatus corrnet_matrix_from_prices(const char *path,
                                              size_t dt,
                                              struct CorrnetMatrix **out);

/**
 * # Safety
 * `m` must be a live matrix handle and `path` a NUL-terminated string.
 */
enum CorrnetStatus corrnet_matrix_write_csv(const struct CorrnetMatrix *m, const char *path);

/**
 * Dimension of the matrix; 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live matrix handle.
 */
size_t corrnet_matrix_dim(const struct CorrnetMatrix *m);

/**
 * # Safety
 * `m` must be a live matrix handle; `value` must be writable.
 */
enum CorrnetStatus corrnet_matrix_get(const struct CorrnetMatrix *m,
                                      size_t i,
                                      size_t j,
                                      double *value);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void corrnet_matrix_free(struct CorrnetMatrix *m);

/**
 * Eigen-decomposition, eigenvalues in descending order.
 *
 * # Safety
 * `m` must be a live matrix handle; `out` must be writable.
 */
enum CorrnetStatus corrnet_spectrum_new(const struct CorrnetMatrix *m,
                                        struct CorrnetSpectrum **out);

/**
 * Number of eigenvalues; 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live spectrum handle.
 */
size_t corrnet_spectrum_len(const struct CorrnetSpectrum *s);

/**
 * Copies the eigenvalues into `buf`, which must hold `corrnet_spectrum_len` values.
 *
 * # Safety
 * `s` must be a live spectrum handle; `buf` must hold `len` doubles.
 */
enum CorrnetStatus corrnet_spectrum_eigenvalues(const struct CorrnetSpectrum *s,
                                                double *buf,
                                                size_t len);

/**
 * Sector-mode matrix from the modes above the noise band for `n_obs`
 * observations, eigenvalue-weighted. With `absolute` the entries are
 * replaced by their magnitudes.
 *
 * # Safety
 * `s` must be a live spectrum handle; `out` must be writable.
 */
enum CorrnetStatus corrnet_spectrum_sector_mode(const struct CorrnetSpectrum *s,
                                                size_t n_obs,
                                                bool absolute,
                                                struct CorrnetMatrix **out);

/**
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void corrnet_spectrum_free(struct CorrnetSpectrum *s);

/**
 * Noise-band edges for `n` series of `t` observations.
 *
 * # Safety
 * `lambda_min` and `lambda_max` must be writable.
 */
enum CorrnetStatus corrnet_mp_bounds(size_t n, size_t t, double *lambda_min, double *lambda_max);

/**
 * # Safety
 * `m` must be a live matrix handle; `out` must be writable.
 */
enum CorrnetStatus corrnet_graph_build(const struct CorrnetMatrix *m,
                                       enum CorrnetGraphKind kind,
                                       struct CorrnetGraph **out);

/**
 * Number of edges; 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t corrnet_graph_edge_count(const struct CorrnetGraph *g);

/**
 * Copies the edges in insertion order; each buffer must hold
 * `corrnet_graph_edge_count` entries.
 *
 * # Safety
 * `g` must be a live graph handle; every buffer must hold `len` entries.
 */
enum CorrnetStatus corrnet_graph_edges(const struct CorrnetGraph *g,
                                       size_t *from,
                                       size_t *to,
                                       double *weight,
                                       size_t len);

/**
 * # Safety
 * `g` must be null or a handle not yet freed.
 */
void corrnet_graph_free(struct CorrnetGraph *g);

/**
 * Map-equation communities of the graph.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum CorrnetStatus corrnet_communities(const struct CorrnetGraph *g,
                                       uint64_t seed,
                                       struct CorrnetPartition **out);

/**
 * Number of communities; 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live partition handle.
 */
size_t corrnet_partition_count(const struct CorrnetPartition *p);

/**
 * Number of nodes; 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live partition handle.
 */
size_t corrnet_partition_len(const struct CorrnetPartition *p);

/**
 * Community index per node.
 *
 * # Safety
 * `p` must be a live partition handle; `buf` must hold `len` entries.
 */
enum CorrnetStatus corrnet_partition_assignment(const struct CorrnetPartition *p,
                                                size_t *buf,
                                                size_t len);

/**
 * Two-level description length in bits.
 *
 * # Safety
 * `p` must be a live partition handle; `bits` must be writable.
 */
enum CorrnetStatus corrnet_partition_codelength(const struct CorrnetPartition *p, double *bits);

/**
 * # Safety
 * `p` must be null or a handle not yet freed.
 */
void corrnet_partition_free(struct CorrnetPartition *p);

/**
 * Runs the full analysis described by a TOML config into `output_dir`.
 *
 * # Safety
 * Both arguments must be NUL-terminated strings.
 */
enum CorrnetStatus corrnet_run_pipeline(const char *config_path, const char *output_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORRNET_H */
