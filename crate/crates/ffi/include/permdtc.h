#ifndef PERMDTC_H
#define PERMDTC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status code of every fallible call.
typedef enum PdStatus {
  PD_STATUS_OK = 0,
  PD_STATUS_NULL_POINTER = 1,
  // Malformed input string or out-of-range argument.
  PD_STATUS_INVALID_ARGUMENT = 2,
  // Configuration or size error.
  PD_STATUS_CONFIG = 3,
  // Numerical or linear algebra failure.
  PD_STATUS_NUMERICAL = 4,
  // Output buffer shorter than required.
  PD_STATUS_BUFFER_TOO_SMALL = 5,
  // A Rust panic was caught at the boundary.
  PD_STATUS_PANIC = 6,
  PD_STATUS_OTHER = 7,
} PdStatus;

// Floquet operator of one disorder realization, with its spectrum computed on demand.
typedef struct PdFloquet PdFloquet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds the Floquet operator of realization `sample` of the model described
// by the TOML text `model_toml` (a `ModelConfig` table) under master seed `seed`.
//
// # Safety
// `model_toml` must be a NUL-terminated string and `out` a valid pointer.
enum PdStatus pd_floquet_build(const char *model_toml,
                               uint64_t seed,
                               uint64_t sample,
                               struct PdFloquet **out);

// Releases a handle; null is ignored.
//
// # Safety
// `h` must come from [`pd_floquet_build`] and not be used afterwards.
void pd_floquet_free(struct PdFloquet *h);

// Hilbert-space dimension 2^L.
//
// # Safety
// `h` and `out` must be valid pointers.
enum PdStatus pd_floquet_dimension(struct PdFloquet *h, uintptr_t *out);

// max |(U†U − 1)_{ab}|.
//
// # Safety
// `h` and `out` must be valid pointers.
enum PdStatus pd_floquet_unitarity_error(struct PdFloquet *h, double *out);

// Copies the sorted quasi-energies in (−π, π] into `buf`, which must hold the full dimension.
//
// # Safety
// `buf` must point to `len` writable doubles.
enum PdStatus pd_floquet_quasi_energies(struct PdFloquet *h, double *buf, uintptr_t len);

// Mean of log10 of the consecutive quasi-energy spacings.
//
// # Safety
// `h` and `out` must be valid pointers.
enum PdStatus pd_floquet_mean_log10_gap(struct PdFloquet *h, double *out);

// Mean adjacent-gap ratio ⟨r⟩ of the full spectrum.
//
// # Safety
// `h` and `out` must be valid pointers.
enum PdStatus pd_floquet_level_ratio(struct PdFloquet *h, double *out);

// Number of length-`n` unit configurations whose minimal period is exactly `k`; zero when `k` does not divide `n`.
//
// # Safety
// `out` must be a valid pointer.
enum PdStatus pd_count_min_period_states(uintptr_t n,
                                         uintptr_t k,
                                         uint64_t *out);

// Kac normalisation of power-law couplings with exponent `kappa` on `sites` sites.
double pd_kac_coefficient(double sites, double kappa);

// Copies the last error message of this thread, NUL-terminated and truncated to
// `len`, and returns its full length in bytes without the terminator.
//
// # Safety
// `buf` must point to `len` writable bytes or be null.
uintptr_t pd_last_error_message(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *pd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERMDTC_H */
