#include "sglab.h"

#include <cstring>
#include <string>

#include "experiments.hpp"

using namespace sgl;

struct sgl_domain {
    DomainSpec spec;
};
struct sgl_basis {
    SpectralBasis basis;
};
struct sgl_mollifier {
    Mollifier mollifier;
};
struct sgl_cache {
    MollifiedEigenCache cache;
};

namespace {

thread_local std::string g_last_error;

sgl_status map_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument:
        case ErrorCode::invalid_truncation:
            return SGL_ERR_INVALID_ARGUMENT;
        case ErrorCode::unsupported_domain:
            return SGL_ERR_UNSUPPORTED_DOMAIN;
        case ErrorCode::index_out_of_range:
        case ErrorCode::parameter_out_of_range:
            return SGL_ERR_OUT_OF_RANGE;
        case ErrorCode::outside_domain:
        case ErrorCode::outside_shrunken_domain:
            return SGL_ERR_OUTSIDE_DOMAIN;
        case ErrorCode::coincident_points:
            return SGL_ERR_COINCIDENT_POINTS;
        case ErrorCode::missing_basis:
            return SGL_ERR_MISSING_BASIS;
        case ErrorCode::negative_variance:
            return SGL_ERR_NEGATIVE_VARIANCE;
        case ErrorCode::beta_out_of_regime:
            return SGL_ERR_BETA_REGIME;
        case ErrorCode::grid_coverage:
            return SGL_ERR_GRID_COVERAGE;
        case ErrorCode::degenerate_bump:
            return SGL_ERR_DEGENERATE_BUMP;
        case ErrorCode::singular_regression:
            return SGL_ERR_SINGULAR_REGRESSION;
        case ErrorCode::dimension_too_large:
            return SGL_ERR_DIMENSION_TOO_LARGE;
        case ErrorCode::point_not_cached:
            return SGL_ERR_POINT_NOT_CACHED;
        case ErrorCode::config_error:
            return SGL_ERR_CONFIG;
        case ErrorCode::io_error:
            return SGL_ERR_IO;
    }
    return SGL_ERR_INTERNAL;
}

template <typename Fn>
sgl_status guarded(Fn&& fn) {
    try {
        fn();
        return SGL_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return map_code(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SGL_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return SGL_ERR_INTERNAL;
    }
}

void copy_out(const std::string& text, char* buf, size_t len) {
    if (buf == nullptr || len == 0) return;
    size_t n = std::min(text.size(), len - 1);
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
}

sgl_status require(bool cond, const char* what) {
    if (cond) return SGL_OK;
    g_last_error = what;
    return SGL_ERR_INVALID_ARGUMENT;
}

} // namespace

extern "C" {

const char* sgl_version(void) {
    static std::string v = library_version();
    return v.c_str();
}

const char* sgl_last_error(void) { return g_last_error.c_str(); }

sgl_status sgl_domain_create_rectangle(double width, double height, sgl_domain** out) {
    if (auto s = require(out != nullptr, "null output handle")) return s;
    return guarded([&] { *out = new sgl_domain{DomainSpec::rectangle(width, height)}; });
}

sgl_status sgl_domain_create_unit_disk(sgl_domain** out) {
    if (auto s = require(out != nullptr, "null output handle")) return s;
    return guarded([&] { *out = new sgl_domain{DomainSpec::unit_disk()}; });
}

void sgl_domain_free(sgl_domain* domain) { delete domain; }

sgl_status sgl_domain_area(const sgl_domain* domain, double* out) {
    if (auto s = require(domain && out, "null argument")) return s;
    return guarded([&] { *out = domain->spec.area(); });
}

sgl_status sgl_domain_contains(const sgl_domain* domain, double x, double y, int* out) {
    if (auto s = require(domain && out, "null argument")) return s;
    return guarded([&] { *out = domain->spec.contains({x, y}) ? 1 : 0; });
}

sgl_status sgl_basis_build(const sgl_domain* domain, int n_modes, sgl_basis** out) {
    if (auto s = require(domain && out, "null argument")) return s;
    return guarded([&] { *out = new sgl_basis{build_basis(domain->spec, n_modes)}; });
}

void sgl_basis_free(sgl_basis* basis) { delete basis; }

sgl_status sgl_basis_size(const sgl_basis* basis, int* out) {
    if (auto s = require(basis && out, "null argument")) return s;
    return guarded([&] { *out = basis->basis.size(); });
}

sgl_status sgl_basis_lambda(const sgl_basis* basis, int k, double* out) {
    if (auto s = require(basis && out, "null argument")) return s;
    return guarded([&] { *out = basis->basis.lambda(k); });
}

sgl_status sgl_basis_eigenfunction(const sgl_basis* basis, int k, double x, double y, double* out) {
    if (auto s = require(basis && out, "null argument")) return s;
    return guarded([&] { *out = basis->basis.eigenfunction(k, {x, y}); });
}

sgl_status sgl_basis_weyl_ratio(const sgl_basis* basis, int k, double* out) {
    if (auto s = require(basis && out, "null argument")) return s;
    return guarded([&] { *out = basis->basis.weyl_ratio(k); });
}

sgl_status sgl_basis_export_csv(const sgl_basis* basis, const char* path) {
    if (auto s = require(basis && path, "null argument")) return s;
    return guarded([&] { basis->basis.export_csv(path); });
}

sgl_status sgl_green_halfplane(double wx, double wy, double zx, double zy, double* out) {
    if (auto s = require(out != nullptr, "null output")) return s;
    return guarded([&] { *out = green_halfplane({wx, wy}, {zx, zy}); });
}

sgl_status sgl_green(const sgl_domain* domain, const sgl_basis* basis_or_null, int route, double x1,
                     double y1, double x2, double y2, double* out) {
    if (auto s = require(domain && out, "null argument")) return s;
    if (auto s = require(route >= 0 && route <= 2, "route must be 0, 1 or 2")) return s;
    return guarded([&] {
        *out = green(domain->spec, basis_or_null ? &basis_or_null->basis : nullptr, {x1, y1},
                     {x2, y2}, static_cast<GreenRoute>(route));
    });
}

sgl_status sgl_mollifier_create(int profile, sgl_mollifier** out) {
    if (auto s = require(out != nullptr, "null output handle")) return s;
    if (auto s = require(profile == 0 || profile == 1, "profile must be 0 or 1")) return s;
    return guarded([&] {
        *out = new sgl_mollifier{
            Mollifier(profile == 0 ? Mollifier::Profile::bump : Mollifier::Profile::bump_sq)};
    });
}

void sgl_mollifier_free(sgl_mollifier* mollifier) { delete mollifier; }

sgl_status sgl_mollifier_hat(const sgl_mollifier* mollifier, double s_arg, double* out) {
    if (auto s = require(mollifier && out, "null argument")) return s;
    return guarded([&] { *out = mollifier->mollifier.hat(s_arg); });
}

sgl_status sgl_mollified_green(const sgl_domain* domain, const sgl_basis* basis_or_null,
                               const sgl_mollifier* mollifier, double eps, double eps2, double x1,
                               double y1, double x2, double y2, double* out) {
    if (auto s = require(domain && mollifier && out, "null argument")) return s;
    return guarded([&] {
        *out = mollified_green(domain->spec, basis_or_null ? &basis_or_null->basis : nullptr,
                               mollifier->mollifier, eps, eps2, {x1, y1}, {x2, y2});
    });
}

sgl_status sgl_cache_build(const sgl_basis* basis, const sgl_mollifier* mollifier, double eps,
                           int nx, int ny, sgl_cache** out) {
    if (auto s = require(basis && mollifier && out, "null argument")) return s;
    return guarded([&] {
        *out = new sgl_cache{MollifiedEigenCache(basis->basis, mollifier->mollifier, eps, nx, ny)};
    });
}

void sgl_cache_free(sgl_cache* cache) { delete cache; }

sgl_status sgl_cache_n_points(const sgl_cache* cache, int* out) {
    if (auto s = require(cache && out, "null argument")) return s;
    return guarded([&] { *out = cache->cache.n_points(); });
}

sgl_status sgl_cache_variance_at(const sgl_cache* cache, double x, double y, double* out) {
    if (auto s = require(cache && out, "null argument")) return s;
    return guarded([&] { *out = cache->cache.variance(cache->cache.index_of({x, y})); });
}

sgl_status sgl_cache_export_csv(const sgl_cache* cache, const char* path) {
    if (auto s = require(cache && path, "null argument")) return s;
    return guarded([&] { cache->cache.export_csv(path); });
}

sgl_status sgl_cache_import_csv(const char* path, sgl_cache** out) {
    if (auto s = require(path && out, "null argument")) return s;
    return guarded([&] { *out = new sgl_cache{MollifiedEigenCache::import_csv(path)}; });
}

sgl_status sgl_sample_modes(int n_modes, uint64_t seed, uint64_t stream, double* out) {
    if (auto s = require(out != nullptr, "null output")) return s;
    return guarded([&] {
        ModeCoefficients m = sample_modes(n_modes, seed, stream);
        std::memcpy(out, m.values.data(), sizeof(double) * m.values.size());
    });
}

sgl_status sgl_field_value(const sgl_basis* basis, const double* modes, int n_modes, double x,
                           double y, double* out) {
    if (auto s = require(basis && modes && out, "null argument")) return s;
    return guarded([&] {
        ModeCoefficients m;
        m.values.assign(modes, modes + n_modes);
        *out = field_value(basis->basis, m, {x, y});
    });
}

sgl_status sgl_mollified_field_value(const sgl_cache* cache, const double* modes, int n_modes,
                                     double x, double y, double* out) {
    if (auto s = require(cache && modes && out, "null argument")) return s;
    return guarded([&] {
        ModeCoefficients m;
        m.values.assign(modes, modes + n_modes);
        *out = cache->cache.field_at(m, cache->cache.index_of({x, y}));
    });
}

sgl_status sgl_bridge_split(const double* modes_at_1, int n_modes, double t, uint64_t seed,
                            uint64_t stream, double* mean_out, double* fresh_out) {
    if (auto s = require(modes_at_1 && mean_out && fresh_out, "null argument")) return s;
    return guarded([&] {
        ModeCoefficients m;
        m.values.assign(modes_at_1, modes_at_1 + n_modes);
        BridgeSplit split = bridge_split(m, t, seed, stream);
        std::memcpy(mean_out, split.mean.data(), sizeof(double) * split.mean.size());
        std::memcpy(fresh_out, split.fresh.values.data(), sizeof(double) * split.fresh.values.size());
    });
}

sgl_status sgl_wick_cos(double w, double variance, double beta, double* out) {
    if (auto s = require(out != nullptr, "null output")) return s;
    return guarded([&] { *out = wick_cos(w, variance, beta); });
}

sgl_status sgl_wick_sin(double w, double variance, double beta, double* out) {
    if (auto s = require(out != nullptr, "null output")) return s;
    return guarded([&] { *out = wick_sin(w, variance, beta); });
}

sgl_status sgl_bmo_kappa(double p, double* out) {
    if (auto s = require(out != nullptr, "null output")) return s;
    return guarded([&] { *out = bmo_kappa(p); });
}

sgl_status sgl_bmo_K(double p, double a, double* k_out, int* valid_out) {
    if (auto s = require(k_out && valid_out, "null output")) return s;
    return guarded([&] {
        BmoConstants c = bmo_constants(p, a);
        *k_out = c.K;
        *valid_out = c.K_valid ? 1 : 0;
    });
}

sgl_status sgl_ising_npoint_halfplane(const double* xs, const double* ys, int n, double* out) {
    if (auto s = require(xs && ys && out, "null argument")) return s;
    return guarded([&] {
        std::vector<std::complex<double>> pts;
        for (int i = 0; i < n; ++i) pts.emplace_back(xs[i], ys[i]);
        *out = ising_npoint_halfplane(pts);
    });
}

sgl_status sgl_zeta_prime_minus1(double* out) {
    if (auto s = require(out != nullptr, "null output")) return s;
    return guarded([&] { *out = zeta_prime_minus1(); });
}

sgl_status sgl_run(const char* subcommand, const char* config_path, uint64_t seed_override,
                   int threads, const char* out_dir, char* summary, size_t summary_len) {
    if (auto s = require(subcommand && config_path, "null argument")) return s;
    bool failed_checks = false;
    sgl_status status = guarded([&] {
        ExperimentConfig cfg = ExperimentConfig::parse_file(config_path);
        RunResult res = run_experiment(subcommand, cfg, out_dir ? out_dir : "", seed_override, threads);
        std::string text;
        char line[256];
        for (const auto& c : res.checks) {
            std::snprintf(line, sizeof(line), "[%s] %s: value=%.6g tolerance=%.6g\n",
                          c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value, c.tolerance);
            text += line;
        }
        copy_out(text, summary, summary_len);
        if (!res.ok()) {
            g_last_error = "one or more checks failed";
            failed_checks = true;
        }
    });
    if (status != SGL_OK) return status;
    return failed_checks ? SGL_ERR_CHECKS_FAILED : SGL_OK;
}

sgl_status sgl_validate(const char* config_path, char* report, size_t report_len) {
    if (auto s = require(config_path != nullptr, "null config path")) return s;
    return guarded([&] {
        ExperimentConfig cfg = ExperimentConfig::parse_file(config_path);
        std::string text = "ok\n";
        for (const auto& line : cfg.validate()) text += line + "\n";
        copy_out(text, report, report_len);
    });
}

} // extern "C"
