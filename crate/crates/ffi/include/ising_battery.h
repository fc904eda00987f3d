#ifndef ISING_BATTERY_H
#define ISING_BATTERY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum IbStatus {
  IB_STATUS_OK = 0,
  IB_STATUS_NULL_POINTER = 1,
  IB_STATUS_INVALID_ARGUMENT = 2,
  IB_STATUS_CONFIG = 3,
  IB_STATUS_INTEGRATION = 4,
  IB_STATUS_IO = 5,
  IB_STATUS_BUFFER_TOO_SMALL = 6,
  IB_STATUS_PANIC = 7,
} IbStatus;

/**
 * A run configuration.
 */
typedef struct IbConfig IbConfig;

/**
 * One sampled noise realisation.
 */
typedef struct IbNoisePath IbNoisePath;

/**
 * Observable time series of one run.
 */
typedef struct IbSeries IbSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length
 * including the terminator, or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
uintptr_t ib_last_error_message(char *buf, uintptr_t len);

void ib_clear_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ib_version(void);

/**
 * Writes the `n / 2` positive quasimomenta of an `n`-site chain.
 *
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum IbStatus ib_quasimomenta(uintptr_t n, double *out, uintptr_t len);

/**
 * Eigenvalues `(eps_minus, eps_plus)` of mode `k` at field `h`.
 *
 * # Safety
 * Output pointers must be valid.
 */
enum IbStatus ib_mode_spectrum(double k, double h, double *eps_minus, double *eps_plus);

/**
 * Ergotropy of a 2x2 density matrix (row-major real and imaginary parts)
 * against a real symmetric Hamiltonian (row-major).
 *
 * # Safety
 * `rho_re`, `rho_im`, `ham` must point to 4 doubles; `out` to one.
 */
enum IbStatus ib_ergotropy_2x2(const double *rho_re,
                               const double *rho_im,
                               const double *ham,
                               double *out);

/**
 * Stored energy of the qubit following the instantaneous ground state.
 *
 * # Safety
 * `out` must be valid.
 */
enum IbStatus ib_adiabatic_energy(double h_i,
                                  double h_f,
                                  double t_f,
                                  double j,
                                  double t,
                                  double *out);

/**
 * Default configuration (chain, N = 300, ramp 0.8 -> 1.5 over 10).
 */
struct IbConfig *ib_config_default(void);

/**
 * Parses a TOML configuration.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid pointer.
 */
enum IbStatus ib_config_from_toml(const char *text, struct IbConfig **out);

/**
 * # Safety
 * `cfg` must be null or a handle from this library, freed at most once.
 */
void ib_config_free(struct IbConfig *cfg);

/**
 * Sets the output directory used by [`ib_run`].
 *
 * # Safety
 * `cfg` must be a live handle and `dir` a NUL-terminated string.
 */
enum IbStatus ib_config_set_output_dir(struct IbConfig *cfg, const char *dir);

/**
 * Overrides the master noise seed.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum IbStatus ib_config_set_seed(struct IbConfig *cfg, uint64_t seed);

/**
 * Runs the configuration in memory.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a valid pointer.
 */
enum IbStatus ib_simulate(const struct IbConfig *cfg, struct IbSeries **out);

/**
 * Runs the configuration and writes its output files.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum IbStatus ib_run(const struct IbConfig *cfg);

/**
 * # Safety
 * `series` must be a live handle.
 */
uintptr_t ib_series_len(const struct IbSeries *series);

/**
 * Copies the series into caller buffers of length `len`. Undefined
 * efficiencies are written as NaN. Any output pointer may be null.
 *
 * # Safety
 * Non-null buffers must be valid for `len` doubles.
 */
enum IbStatus ib_series_copy(const struct IbSeries *series,
                             double *t,
                             double *de_per_site,
                             double *ergotropy_per_site,
                             double *efficiency,
                             uintptr_t len);

/**
 * # Safety
 * `series` must be null or a handle from this library, freed at most once.
 */
void ib_series_free(struct IbSeries *series);

/**
 * Samples an Ornstein-Uhlenbeck path on a uniform grid over
 * `[0, t_end]` with spacing at most `max_step`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum IbStatus ib_noise_path_sample(double xi,
                                   double tau_n,
                                   uint64_t seed,
                                   double t_end,
                                   double max_step,
                                   struct IbNoisePath **out);

/**
 * # Safety
 * `path` must be a live handle.
 */
uintptr_t ib_noise_path_len(const struct IbNoisePath *path);

/**
 * # Safety
 * Non-null buffers must be valid for `len` doubles.
 */
enum IbStatus ib_noise_path_copy(const struct IbNoisePath *path,
                                 double *t,
                                 double *eta,
                                 uintptr_t len);

/**
 * # Safety
 * `path` must be null or a handle from this library, freed at most once.
 */
void ib_noise_path_free(struct IbNoisePath *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISING_BATTERY_H */
