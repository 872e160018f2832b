#ifndef FERMRED_H
#define FERMRED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum FermredStatus {
  FERMRED_STATUS_OK = 0,
  FERMRED_STATUS_NULL_POINTER = 1,
  FERMRED_STATUS_ARGUMENT = 2,
  FERMRED_STATUS_VALIDATION = 3,
  FERMRED_STATUS_PRECONDITION = 4,
  FERMRED_STATUS_NUMERIC = 5,
  FERMRED_STATUS_IO = 6,
  FERMRED_STATUS_BUFFER_TOO_SMALL = 7,
  FERMRED_STATUS_PANIC = 8,
} FermredStatus;

/**
 * Outcome classes of a spectral comparison.
 */
typedef enum FermredVerdict {
  FERMRED_VERDICT_AGREE = 0,
  FERMRED_VERDICT_INCONCLUSIVE = 1,
  FERMRED_VERDICT_DISAGREE = 2,
} FermredVerdict;

/**
 * Random-state ensembles for [`fermred_state_sample`].
 */
typedef enum FermredEnsemble {
  FERMRED_ENSEMBLE_GENERAL = 0,
  FERMRED_ENSEMBLE_SSR_EVEN = 1,
  FERMRED_ENSEMBLE_SSR_ODD = 2,
  /**
   * Uses the `particles` argument.
   */
  FERMRED_ENSEMBLE_FIXED_N = 3,
} FermredEnsemble;

/**
 * Dense complex matrix.
 */
typedef struct FermredMatrix FermredMatrix;

/**
 * Normalized pure state on `n` modes.
 */
typedef struct FermredState FermredState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next call on this thread.
 */
const char *fermred_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *fermred_version(void);

/**
 * Builds a state from `2^n` amplitudes split into real and imaginary parts.
 * The amplitudes must have unit norm within `1e-12`.
 *
 * # Safety
 * `re` and `im` must point to `len` readable doubles; `out` must be writable.
 */
enum FermredStatus fermred_state_new(size_t n,
                                     const double *re,
                                     const double *im,
                                     size_t len,
                                     struct FermredState **out);

/**
 * Parses the plain-text state-file format.
 *
 * # Safety
 * `text` must be a nul-terminated string; `out` must be writable.
 */
enum FermredStatus fermred_state_from_text(const char *text, struct FermredState **out);

/**
 * Deterministic random state. `ensemble` is a [`FermredEnsemble`] value;
 * `particles` is read only for the fixed-N ensemble.
 *
 * # Safety
 * `out` must be writable.
 */
enum FermredStatus fermred_state_sample(size_t n,
                                        int32_t ensemble,
                                        size_t particles,
                                        uint64_t seed,
                                        struct FermredState **out);

/**
 * # Safety
 * `state` must come from this library and not be used afterwards; null is ignored.
 */
void fermred_state_free(struct FermredState *state);

/**
 * Mode count, or 0 for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
size_t fermred_state_modes(const struct FermredState *state);

/**
 * Copies the `2^n` amplitudes into `re` and `im`, each of length `len`.
 *
 * # Safety
 * `state` must be a live handle; `re` and `im` must hold `len` doubles.
 */
enum FermredStatus fermred_state_amplitudes(const struct FermredState *state,
                                            double *re,
                                            double *im,
                                            size_t len);

/**
 * Mode-reduced density matrix of one block. The first block consists of the
 * `count` modes in `first_modes`; `second_block` selects its complement.
 *
 * # Safety
 * `state` must be a live handle, `first_modes` must hold `count` values and `out` must be writable.
 */
enum FermredStatus fermred_reduce_modes(const struct FermredState *state,
                                        const size_t *first_modes,
                                        size_t count,
                                        bool second_block,
                                        struct FermredMatrix **out);

/**
 * Unnormalized p-particle reduced density matrix in the colexicographic tuple basis.
 *
 * # Safety
 * `state` must be a live handle and `out` writable.
 */
enum FermredStatus fermred_rdm(const struct FermredState *state,
                               size_t p,
                               struct FermredMatrix **out);

/**
 * # Safety
 * `matrix` must come from this library and not be used afterwards; null is ignored.
 */
void fermred_matrix_free(struct FermredMatrix *matrix);

/**
 * Side length of a square matrix, or 0 for a null handle.
 *
 * # Safety
 * `matrix` must be null or a live handle.
 */
size_t fermred_matrix_dim(const struct FermredMatrix *matrix);

/**
 * # Safety
 * `matrix` must be a live handle; `re` and `im` must be writable.
 */
enum FermredStatus fermred_matrix_get(const struct FermredMatrix *matrix,
                                      size_t row,
                                      size_t col,
                                      double *re,
                                      double *im);

/**
 * Eigenvalues in descending order. `len` must be at least the dimension.
 *
 * # Safety
 * `matrix` must be a live handle; `values` must hold `len` doubles.
 */
enum FermredStatus fermred_matrix_spectrum(const struct FermredMatrix *matrix,
                                           double *values,
                                           size_t len);

/**
 * Compares the zero-padded spectra of the two mode-reduced states.
 *
 * # Safety
 * `state` must be a live handle, `first_modes` must hold `count` values, and the out pointers must be writable.
 */
enum FermredStatus fermred_equispectral(const struct FermredState *state,
                                        const size_t *first_modes,
                                        size_t count,
                                        double tol,
                                        bool *equal,
                                        double *max_gap);

/**
 * Von Neumann entropies of both mode-reduced states, in bits.
 *
 * # Safety
 * `state` must be a live handle, `first_modes` must hold `count` values, and the out pointers must be writable.
 */
enum FermredStatus fermred_entropies(const struct FermredState *state,
                                     const size_t *first_modes,
                                     size_t count,
                                     double *s1,
                                     double *s2);

/**
 * The `n` natural occupation numbers, descending.
 *
 * # Safety
 * `state` must be a live handle; `values` must hold `len` doubles.
 */
enum FermredStatus fermred_natural_occupations(const struct FermredState *state,
                                               double *values,
                                               size_t len);

/**
 * Compares the nonzero spectra of `ρ_p` and `Φ^p(|ψ⟩⟨ψ|)` with the default bands.
 * `scaled_gap` is the gap after dividing `Φ^p` by `p!`.
 *
 * # Safety
 * `state` must be a live handle and the out pointers writable.
 */
enum FermredStatus fermred_conjecture_trial(const struct FermredState *state,
                                            size_t p,
                                            double *max_gap,
                                            enum FermredVerdict *verdict,
                                            double *scaled_gap);

/**
 * Two-mode criterion for amplitudes ordered `c00, c01, c10, c11`.
 *
 * # Safety
 * `re` and `im` must each hold 4 doubles; `out` must be writable.
 */
enum FermredStatus fermred_two_mode_criterion(const double *re, const double *im, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FERMRED_H */
