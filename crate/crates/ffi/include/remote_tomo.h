#ifndef REMOTE_TOMO_H
#define REMOTE_TOMO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Ramp-filter taper.
 */
typedef enum RtApodization {
  RT_APODIZATION_NONE = 0,
  RT_APODIZATION_COSINE = 1,
} RtApodization;

/**
 * Sinogram source.
 */
typedef enum RtMode {
  RT_MODE_EXACT = 0,
  RT_MODE_SIMULATED = 1,
} RtMode;

/**
 * Status codes returned by every fallible function.
 */
typedef enum RtStatus {
  RT_STATUS_OK = 0,
  RT_STATUS_NULL_POINTER = 1,
  /**
   * Invalid parameter, configuration or input file.
   */
  RT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A quadrature or evaluation budget was exhausted.
   */
  RT_STATUS_NUMERICAL = 3,
  /**
   * Invalid, too narrow or mismatched grid.
   */
  RT_STATUS_GRID = 4,
  RT_STATUS_IO = 5,
  RT_STATUS_BUFFER_TOO_SMALL = 6,
  RT_STATUS_PANIC = 7,
} RtStatus;

/**
 * A position-space density matrix on a `q x q'` grid.
 */
typedef struct RtDensityMatrix RtDensityMatrix;

/**
 * Quadrature densities indexed `[angle, u]`.
 */
typedef struct RtSinogram RtSinogram;

/**
 * A sampled system wavefunction.
 */
typedef struct RtState RtState;

/**
 * A Wigner function on a `q x p` grid.
 */
typedef struct RtWigner RtWigner;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated, into
 * `buf` and returns its length without the terminator. Pass a null `buf` to
 * query the length.
 */
size_t rt_last_error_message(char *buf, size_t len);

/**
 * Oscillator eigenstate `n` on `[min, max]` with `count` samples.
 */
enum RtStatus rt_state_fock(size_t n, double min, double max, size_t count, struct RtState **out);

/**
 * Coherent state centred at `(q0, p0)`.
 */
enum RtStatus rt_state_displaced_vacuum(double q0,
                                        double p0,
                                        double min,
                                        double max,
                                        size_t count,
                                        struct RtState **out);

/**
 * Loads a `q,re,im` CSV wavefunction file.
 */
enum RtStatus rt_state_load(const char *path, struct RtState **out);

/**
 * Sets `*norm` to the discrete norm of the state.
 */
enum RtStatus rt_state_norm(const struct RtState *state, double *norm);

void rt_state_free(struct RtState *state);

/**
 * Expectation of the rotated tracking observable at `(theta, u)` for a
 * symmetric preparation of width `b1`.
 */
enum RtStatus rt_expect_y_theta(const struct RtState *state,
                                double b1,
                                double theta,
                                double u,
                                double *value);

/**
 * Sinogram over `angle_count` equally spaced angles in `[0, pi)`.
 *
 * `b1` is ignored in exact mode; `omega_tau` applies transit correction in
 * simulated mode.
 */
enum RtStatus rt_sinogram_build(const struct RtState *state,
                                enum RtMode mode,
                                double b1,
                                double omega_tau,
                                size_t angle_count,
                                double u_min,
                                double u_max,
                                size_t u_count,
                                struct RtSinogram **out);

enum RtStatus rt_sinogram_dims(const struct RtSinogram *sino, size_t *angles, size_t *samples);

/**
 * Copies the `angles x samples` values.
 */
enum RtStatus rt_sinogram_values(const struct RtSinogram *sino, double *buf, size_t len);

void rt_sinogram_free(struct RtSinogram *sino);

/**
 * Filtered backprojection onto the square grid `[min, max]^2`.
 * A nonpositive `eta_max` selects the Nyquist limit.
 */
enum RtStatus rt_reconstruct_wigner(const struct RtSinogram *sino,
                                    double min,
                                    double max,
                                    size_t count,
                                    double eta_max,
                                    enum RtApodization apodization,
                                    struct RtWigner **out);

enum RtStatus rt_wigner_dims(const struct RtWigner *w, size_t *q_count, size_t *p_count);

/**
 * Copies the `q_count x p_count` values.
 */
enum RtStatus rt_wigner_values(const struct RtWigner *w, double *buf, size_t len);

/**
 * Bilinear value at `(q, p)`, zero outside the grid.
 */
enum RtStatus rt_wigner_value_at(const struct RtWigner *w, double q, double p, double *value);

void rt_wigner_free(struct RtWigner *w);

/**
 * Density matrix on `[min, max]^2`. The sinogram must contain `theta = 0`.
 */
enum RtStatus rt_reconstruct_density_matrix(const struct RtSinogram *sino,
                                            double min,
                                            double max,
                                            size_t count,
                                            struct RtDensityMatrix **out);

enum RtStatus rt_density_matrix_dim(const struct RtDensityMatrix *rho, size_t *count);

/**
 * Copies real and imaginary parts into two `count x count` buffers.
 */
enum RtStatus rt_density_matrix_values(const struct RtDensityMatrix *rho,
                                       double *re,
                                       double *im,
                                       size_t len);

/**
 * `<phi|rho|phi>` against a reference state.
 */
enum RtStatus rt_density_matrix_fidelity(const struct RtDensityMatrix *rho,
                                         const struct RtState *state,
                                         double *value);

void rt_density_matrix_free(struct RtDensityMatrix *rho);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REMOTE_TOMO_H */
