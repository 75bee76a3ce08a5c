// Exercises the shared library exactly as an external C consumer would:
// only the public header, no internal C++ types.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sglab.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

TEST_CASE("version and error reporting") {
    CHECK(std::strlen(sgl_version()) > 0);
    sgl_domain* dom = nullptr;
    CHECK(sgl_domain_create_rectangle(-1.0, 1.0, &dom) == SGL_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(sgl_last_error()) > 0);
}

TEST_CASE("domain and basis lifecycle") {
    sgl_domain* sq = nullptr;
    REQUIRE(sgl_domain_create_rectangle(1.0, 1.0, &sq) == SGL_OK);
    double area = 0.0;
    CHECK(sgl_domain_area(sq, &area) == SGL_OK);
    CHECK(area == doctest::Approx(1.0));
    int inside = 0;
    CHECK(sgl_domain_contains(sq, 0.5, 0.5, &inside) == SGL_OK);
    CHECK(inside == 1);

    sgl_basis* basis = nullptr;
    CHECK(sgl_basis_build(sq, 0, &basis) == SGL_ERR_INVALID_ARGUMENT);
    REQUIRE(sgl_basis_build(sq, 8, &basis) == SGL_OK);
    int n = 0;
    CHECK(sgl_basis_size(basis, &n) == SGL_OK);
    CHECK(n == 8);
    double lambda1 = 0.0;
    CHECK(sgl_basis_lambda(basis, 1, &lambda1) == SGL_OK);
    CHECK(lambda1 == doctest::Approx(1.0 / (2.0 * M_PI * M_PI)).epsilon(1e-14));
    double e1 = 0.0;
    CHECK(sgl_basis_eigenfunction(basis, 1, 0.5, 0.5, &e1) == SGL_OK);
    CHECK(e1 == doctest::Approx(2.0).epsilon(1e-14));
    double w1 = 0.0;
    CHECK(sgl_basis_weyl_ratio(basis, 1, &w1) == SGL_OK);
    CHECK(w1 == doctest::Approx(lambda1).epsilon(1e-14));
    double bad = 0.0;
    CHECK(sgl_basis_weyl_ratio(basis, 0, &bad) == SGL_ERR_OUT_OF_RANGE);
    CHECK(sgl_basis_export_csv(basis, "/tmp/sglab_capi_eigen.csv") == SGL_OK);

    sgl_basis_free(basis);
    sgl_domain_free(sq);
}

TEST_CASE("green values through the C surface") {
    double g = 0.0;
    CHECK(sgl_green_halfplane(0.0, 1.0, 0.0, 2.0, &g) == SGL_OK);
    CHECK(g == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(sgl_green_halfplane(0.0, -1.0, 0.0, 2.0, &g) == SGL_ERR_OUTSIDE_DOMAIN);

    sgl_domain* disk = nullptr;
    REQUIRE(sgl_domain_create_unit_disk(&disk) == SGL_OK);
    double gc = 0.0;
    CHECK(sgl_green(disk, nullptr, 2, 0.0, 0.0, 0.3, 0.2, &gc) == SGL_OK);
    CHECK(gc == doctest::Approx(-std::log(std::hypot(0.3, 0.2))).epsilon(1e-12));
    double outside = 1.0;
    CHECK(sgl_green(disk, nullptr, 2, 1.5, 0.0, 0.3, 0.2, &outside) == SGL_OK);
    CHECK(outside == 0.0);
    CHECK(sgl_green(disk, nullptr, 2, 0.3, 0.2, 0.3, 0.2, &gc) == SGL_ERR_COINCIDENT_POINTS);
    // series route without a basis
    CHECK(sgl_green(disk, nullptr, 1, 0.0, 0.0, 0.3, 0.2, &gc) == SGL_ERR_MISSING_BASIS);
    sgl_domain_free(disk);
}

TEST_CASE("mollifier, cache, sampling, bridge") {
    sgl_domain* sq = nullptr;
    REQUIRE(sgl_domain_create_rectangle(1.0, 1.0, &sq) == SGL_OK);
    sgl_basis* basis = nullptr;
    REQUIRE(sgl_basis_build(sq, 16, &basis) == SGL_OK);
    sgl_mollifier* moll = nullptr;
    REQUIRE(sgl_mollifier_create(0, &moll) == SGL_OK);
    double hat0 = 0.0;
    CHECK(sgl_mollifier_hat(moll, 0.0, &hat0) == SGL_OK);
    CHECK(hat0 == doctest::Approx(1.0).epsilon(1e-12));

    sgl_cache* cache = nullptr;
    REQUIRE(sgl_cache_build(basis, moll, 0.2, 10, 10, &cache) == SGL_OK);
    int pts = 0;
    CHECK(sgl_cache_n_points(cache, &pts) == SGL_OK);
    CHECK(pts > 0);
    double var = 0.0;
    CHECK(sgl_cache_variance_at(cache, 0.45, 0.45, &var) == SGL_OK);
    CHECK(var > 0.0);
    CHECK(sgl_cache_variance_at(cache, 0.05, 0.05, &var) == SGL_ERR_POINT_NOT_CACHED);
    CHECK(sgl_cache_export_csv(cache, "/tmp/sglab_capi_cache.csv") == SGL_OK);
    sgl_cache* back = nullptr;
    CHECK(sgl_cache_import_csv("/tmp/sglab_capi_cache.csv", &back) == SGL_OK);
    double var2 = 0.0;
    CHECK(sgl_cache_variance_at(back, 0.45, 0.45, &var2) == SGL_OK);
    CHECK(var2 == doctest::Approx(var).epsilon(1e-14));

    std::vector<double> modes(16), modes2(16);
    CHECK(sgl_sample_modes(16, 7u, 3u, modes.data()) == SGL_OK);
    CHECK(sgl_sample_modes(16, 7u, 3u, modes2.data()) == SGL_OK);
    CHECK(modes == modes2);

    double fv = 0.0;
    CHECK(sgl_field_value(basis, modes.data(), 16, 0.5, 0.5, &fv) == SGL_OK);
    double mfv = 0.0;
    CHECK(sgl_mollified_field_value(cache, modes.data(), 16, 0.45, 0.45, &mfv) == SGL_OK);

    std::vector<double> mean_out(16), fresh(16);
    CHECK(sgl_bridge_split(modes.data(), 16, 1.0, 9u, 0u, mean_out.data(), fresh.data()) == SGL_OK);
    for (double f : fresh) CHECK(f == 0.0);
    CHECK(sgl_bridge_split(modes.data(), 16, 1.5, 9u, 0u, mean_out.data(), fresh.data()) ==
          SGL_ERR_OUT_OF_RANGE);

    double mg = 0.0;
    CHECK(sgl_mollified_green(sq, basis, moll, 0.15, 0.15, 0.5, 0.5, 0.5, 0.5, &mg) == SGL_OK);
    CHECK(mg > 0.0);

    sgl_cache_free(back);
    sgl_cache_free(cache);
    sgl_mollifier_free(moll);
    sgl_basis_free(basis);
    sgl_domain_free(sq);
}

TEST_CASE("scalar specials") {
    double w = 0.0;
    CHECK(sgl_wick_cos(0.0, 1.0, 1.0, &w) == SGL_OK);
    CHECK(w == doctest::Approx(std::exp(0.5)).epsilon(1e-14));
    CHECK(sgl_wick_cos(0.0, -1.0, 1.0, &w) == SGL_ERR_NEGATIVE_VARIANCE);

    double kappa = 0.0;
    CHECK(sgl_bmo_kappa(2.0, &kappa) == SGL_OK);
    CHECK(kappa == doctest::Approx(0.049460).epsilon(1e-4));
    double K = 0.0;
    int valid = 0;
    CHECK(sgl_bmo_K(1.1, 0.05, &K, &valid) == SGL_OK);
    CHECK(valid == 1);
    CHECK(K == doctest::Approx(2.465).epsilon(1e-3));
    CHECK(sgl_bmo_K(2.0, 1.0, &K, &valid) == SGL_OK);
    CHECK(valid == 0);

    double xs[1] = {0.0}, ys[1] = {1.0};
    double corr = 0.0;
    CHECK(sgl_ising_npoint_halfplane(xs, ys, 1, &corr) == SGL_OK);
    CHECK(corr == doctest::Approx(std::pow(2.0, 0.125)).epsilon(1e-12));

    double zp = 0.0;
    CHECK(sgl_zeta_prime_minus1(&zp) == SGL_OK);
    CHECK(zp == doctest::Approx(-0.16542114370045092).epsilon(1e-9));
}

TEST_CASE("run and validate through the C surface") {
    std::string cfg = "/tmp/sglab_capi_cfg.ini";
    std::ofstream(cfg) << "[rho]\nkind = bump\n[spectral]\nweyl_modes = 1500\n";

    std::vector<char> report(1 << 16);
    CHECK(sgl_validate(cfg.c_str(), report.data(), report.size()) == SGL_OK);
    CHECK(std::string(report.data()).rfind("ok", 0) == 0);

    std::vector<char> summary(1 << 16);
    CHECK(sgl_run("weyl", cfg.c_str(), 0, 0, "/tmp/sglab_capi_out", summary.data(), summary.size()) ==
          SGL_OK);
    CHECK(std::string(summary.data()).find("weyl_plateau_spread") != std::string::npos);

    std::string bad = "/tmp/sglab_capi_bad.ini";
    std::ofstream(bad) << "[rho]\nkind = bump\n[coupling]\nbeta = 1.5\n";
    CHECK(sgl_run("weyl", bad.c_str(), 0, 0, "/tmp/sglab_capi_out", summary.data(), summary.size()) ==
          SGL_ERR_BETA_REGIME);
    CHECK(sgl_validate("/nonexistent/path.ini", report.data(), report.size()) == SGL_ERR_CONFIG);
}
