/* sglab: spectral Gaussian free fields, Wick-ordered chaos, quadratic BSDEs
 * and Coulomb-gas partition diagnostics on bounded planar domains.
 *
 * C interface: opaque handles plus status codes. Every function returns
 * SGL_OK on success; on failure the thread-local message from
 * sgl_last_error() describes what went wrong.
 */
#ifndef SGLAB_H
#define SGLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgl_status {
    SGL_OK = 0,
    SGL_ERR_INVALID_ARGUMENT,
    SGL_ERR_UNSUPPORTED_DOMAIN,
    SGL_ERR_OUT_OF_RANGE,
    SGL_ERR_OUTSIDE_DOMAIN,
    SGL_ERR_COINCIDENT_POINTS,
    SGL_ERR_MISSING_BASIS,
    SGL_ERR_NEGATIVE_VARIANCE,
    SGL_ERR_BETA_REGIME,
    SGL_ERR_GRID_COVERAGE,
    SGL_ERR_DEGENERATE_BUMP,
    SGL_ERR_SINGULAR_REGRESSION,
    SGL_ERR_DIMENSION_TOO_LARGE,
    SGL_ERR_POINT_NOT_CACHED,
    SGL_ERR_CONFIG,
    SGL_ERR_IO,
    SGL_ERR_CHECKS_FAILED,
    SGL_ERR_INTERNAL
} sgl_status;

typedef struct sgl_domain sgl_domain;
typedef struct sgl_basis sgl_basis;
typedef struct sgl_mollifier sgl_mollifier;
typedef struct sgl_cache sgl_cache;

const char* sgl_version(void);
/* thread-local message describing the most recent failure */
const char* sgl_last_error(void);

/* --- domains and spectra ------------------------------------------------- */

sgl_status sgl_domain_create_rectangle(double width, double height, sgl_domain** out);
sgl_status sgl_domain_create_unit_disk(sgl_domain** out);
void sgl_domain_free(sgl_domain* domain);
sgl_status sgl_domain_area(const sgl_domain* domain, double* out);
sgl_status sgl_domain_contains(const sgl_domain* domain, double x, double y, int* out);

sgl_status sgl_basis_build(const sgl_domain* domain, int n_modes, sgl_basis** out);
void sgl_basis_free(sgl_basis* basis);
sgl_status sgl_basis_size(const sgl_basis* basis, int* out);
/* 1-based mode index; lambda is the eigenvalue of the inverse Dirichlet Laplacian */
sgl_status sgl_basis_lambda(const sgl_basis* basis, int k, double* out);
sgl_status sgl_basis_eigenfunction(const sgl_basis* basis, int k, double x, double y, double* out);
sgl_status sgl_basis_weyl_ratio(const sgl_basis* basis, int k, double* out);
/* eigenpair table (k, lambda_k, lambda_k*k) */
sgl_status sgl_basis_export_csv(const sgl_basis* basis, const char* path);

/* --- Green functions ------------------------------------------------------ */

sgl_status sgl_green_halfplane(double wx, double wy, double zx, double zy, double* out);
/* route: 0 automatic, 1 truncated series, 2 conformal map */
sgl_status sgl_green(const sgl_domain* domain, const sgl_basis* basis_or_null, int route, double x1,
                     double y1, double x2, double y2, double* out);

/* profile: 0 standard bump, 1 squared-argument bump */
sgl_status sgl_mollifier_create(int profile, sgl_mollifier** out);
void sgl_mollifier_free(sgl_mollifier* mollifier);
/* radial Fourier multiplier picked up by a Helmholtz mode of frequency s */
sgl_status sgl_mollifier_hat(const sgl_mollifier* mollifier, double s, double* out);
/* double convolution of the Green function by quadrature over the two balls */
sgl_status sgl_mollified_green(const sgl_domain* domain, const sgl_basis* basis_or_null,
                               const sgl_mollifier* mollifier, double eps, double eps2, double x1,
                               double y1, double x2, double y2, double* out);

/* --- sampling -------------------------------------------------------------- */

sgl_status sgl_cache_build(const sgl_basis* basis, const sgl_mollifier* mollifier, double eps,
                           int nx, int ny, sgl_cache** out);
void sgl_cache_free(sgl_cache* cache);
sgl_status sgl_cache_n_points(const sgl_cache* cache, int* out);
/* matched-truncation Wick variance G^{eps,N}(x) at a cached grid node */
sgl_status sgl_cache_variance_at(const sgl_cache* cache, double x, double y, double* out);
sgl_status sgl_cache_export_csv(const sgl_cache* cache, const char* path);
sgl_status sgl_cache_import_csv(const char* path, sgl_cache** out);

/* fills out[0..n_modes) with i.i.d. standard normals, reproducible per (seed, stream) */
sgl_status sgl_sample_modes(int n_modes, uint64_t seed, uint64_t stream, double* out);
sgl_status sgl_field_value(const sgl_basis* basis, const double* modes, int n_modes, double x,
                           double y, double* out);
sgl_status sgl_mollified_field_value(const sgl_cache* cache, const double* modes, int n_modes,
                                     double x, double y, double* out);
/* mean_out = sqrt(t) * modes; fresh_out ~ N(0,1); B_1 = mean + sqrt(1-t) * fresh */
sgl_status sgl_bridge_split(const double* modes_at_1, int n_modes, double t, uint64_t seed,
                            uint64_t stream, double* mean_out, double* fresh_out);

/* --- Wick-ordered trigonometry and BMO constants --------------------------- */

sgl_status sgl_wick_cos(double w, double variance, double beta, double* out);
sgl_status sgl_wick_sin(double w, double variance, double beta, double* out);

sgl_status sgl_bmo_kappa(double p, double* out);
/* valid_out reports whether the reverse Holder constant is finite at (p, a) */
sgl_status sgl_bmo_K(double p, double a, double* k_out, int* valid_out);

/* --- Coulomb-gas specials --------------------------------------------------- */

sgl_status sgl_ising_npoint_halfplane(const double* xs, const double* ys, int n, double* out);
sgl_status sgl_zeta_prime_minus1(double* out);

/* --- experiment front end ---------------------------------------------------
 * Subcommands: green-check, weyl, wick-check, bsde-run, taylor-check,
 * partition, charge-cf, xor-check, epsilon-sweep.
 * seed_override = 0 keeps the configured seed; threads = 0 keeps the default;
 * out_dir = NULL or "" resolves to $SGLAB_OUT, then ".".
 * Returns SGL_OK when every check passed, SGL_ERR_CHECKS_FAILED when the run
 * completed with failing checks. `summary` receives one line per check.
 */
sgl_status sgl_run(const char* subcommand, const char* config_path, uint64_t seed_override,
                   int threads, const char* out_dir, char* summary, size_t summary_len);
/* full validation without execution; `report` receives the effective settings */
sgl_status sgl_validate(const char* config_path, char* report, size_t report_len);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SGLAB_H */
