#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sampler.hpp"

using namespace sgl;

TEST_CASE("mode sampling is deterministic per (seed, stream)") {
    ModeCoefficients a = sample_modes(64, 42u, 7u);
    ModeCoefficients b = sample_modes(64, 42u, 7u);
    CHECK(a.values == b.values);
    ModeCoefficients c = sample_modes(64, 42u, 8u);
    CHECK(a.values != c.values);
}

TEST_CASE("mode samples are standard normal") {
    const int n = 1000000;
    std::vector<double> xs(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        RngStream rng(123u, static_cast<std::uint64_t>(i));
        xs[static_cast<std::size_t>(i)] = rng.normal();
    }
    double m = mean(xs);
    double v = variance(xs);
    CHECK(std::abs(m) < 3e-3);       // 3 sigma for 1e6 draws
    CHECK(std::abs(v - 1.0) < 5e-3); // CLT bound on the variance estimate
}

TEST_CASE("sample matrix is invariant under the number of workers") {
    Eigen::MatrixXd m1, m4;
#ifdef _OPENMP
    int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    m1 = sample_mode_matrix(32, 257, 9u, 100u);
    omp_set_num_threads(4);
    m4 = sample_mode_matrix(32, 257, 9u, 100u);
    omp_set_num_threads(saved);
#else
    m1 = sample_mode_matrix(32, 257, 9u, 100u);
    m4 = sample_mode_matrix(32, 257, 9u, 100u);
#endif
    CHECK((m1 - m4).cwiseAbs().maxCoeff() == 0.0);
    // columns match the single-sample generator
    ModeCoefficients one = sample_modes(32, 9u, 103u);
    for (int k = 0; k < 32; ++k) CHECK(m1(k, 3) == one.values[static_cast<std::size_t>(k)]);
}

TEST_CASE("field value: zero modes, single-mode value, linearity") {
    DomainSpec sq = DomainSpec::rectangle(1.0, 1.0);
    SpectralBasis basis = build_basis(sq, 8);
    ModeCoefficients zero;
    zero.values.assign(8, 0.0);
    CHECK(field_value(basis, zero, {0.3, 0.8}) == 0.0);

    ModeCoefficients e1;
    e1.values.assign(8, 0.0);
    e1.values[0] = 1.0;
    CHECK(field_value(basis, e1, {0.5, 0.5}) == doctest::Approx(2.0 / std::sqrt(M_PI)).epsilon(1e-12));

    ModeCoefficients a = sample_modes(8, 5u, 0u);
    ModeCoefficients b = sample_modes(8, 5u, 1u);
    ModeCoefficients combo;
    combo.values.resize(8);
    for (int k = 0; k < 8; ++k)
        combo.values[static_cast<std::size_t>(k)] =
            2.0 * a.values[static_cast<std::size_t>(k)] - 0.7 * b.values[static_cast<std::size_t>(k)];
    Point p{0.27, 0.64};
    CHECK(field_value(basis, combo, p) ==
          doctest::Approx(2.0 * field_value(basis, a, p) - 0.7 * field_value(basis, b, p))
              .epsilon(1e-12));

    CHECK_THROWS_AS((void)field_value(basis, a, {1.5, 0.5}), Error);
}

TEST_CASE("empirical field variance matches the spectral sum") {
    DomainSpec sq = DomainSpec::rectangle(1.0, 1.0);
    SpectralBasis basis = build_basis(sq, 32);
    Point x{0.37, 0.52};
    double target = 0.0;
    for (int k = 1; k <= 32; ++k) {
        double e = basis.eigenfunction(k, x);
        target += 2.0 * M_PI * basis.lambda(k) * e * e;
    }
    const int n = 100000;
    std::vector<double> vals(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        vals[static_cast<std::size_t>(i)] =
            field_value(basis, sample_modes(32, 99u, static_cast<std::uint64_t>(i)), x);
    double v = variance(vals);
    double sigma_v = target * std::sqrt(2.0 / n);
    CHECK(std::abs(v - target) < 3.0 * sigma_v);
}

TEST_CASE("covariance identity for finite eigen-combinations") {
    DomainSpec sq = DomainSpec::rectangle(1.0, 1.0);
    SpectralBasis basis = build_basis(sq, 8);
    // f = e1 + 0.5 e3, g = e2 - e3 in eigen-coordinates
    std::vector<double> f = {1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0};
    std::vector<double> g = {0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    double target = 0.0;
    for (int k = 0; k < 8; ++k)
        target += 2.0 * M_PI * basis.lambda(k + 1) * f[static_cast<std::size_t>(k)] *
                  g[static_cast<std::size_t>(k)];
    const int n = 200000;
    std::vector<double> prod(n), wf_sq(n), wg_sq(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        ModeCoefficients xi = sample_modes(8, 1234u, static_cast<std::uint64_t>(i));
        double wf = 0.0, wg = 0.0;
        for (int k = 0; k < 8; ++k) {
            double s = std::sqrt(2.0 * M_PI * basis.lambda(k + 1)) * xi.values[static_cast<std::size_t>(k)];
            wf += s * f[static_cast<std::size_t>(k)];
            wg += s * g[static_cast<std::size_t>(k)];
        }
        prod[static_cast<std::size_t>(i)] = wf * wg;
        wf_sq[static_cast<std::size_t>(i)] = wf * wf;
        wg_sq[static_cast<std::size_t>(i)] = wg * wg;
    }
    double cov = mean(prod); // both factors are centered
    double sigma = std::sqrt((mean(wf_sq) * mean(wg_sq) + cov * cov) / n);
    CHECK(std::abs(cov - target) < 3.0 * sigma);
}

TEST_CASE("mollified eigen cache: variance table consistency and field evaluation") {
    DomainSpec sq = DomainSpec::rectangle(1.0, 1.0);
    SpectralBasis basis = build_basis(sq, 48);
    Mollifier moll(Mollifier::Profile::bump);
    MollifiedEigenCache cache(basis, moll, 0.1, 24, 24);
    CHECK(cache.n_points() > 0);
    // Parseval identity between the table and the variance column
    for (int g = 0; g < cache.n_points(); g += 7) {
        double acc = 0.0;
        for (int k = 1; k <= cache.n_modes(); ++k) {
            double t = cache.table()(g, k - 1);
            acc += 2.0 * M_PI * cache.lambda(k) * t * t;
        }
        CHECK(acc == doctest::Approx(cache.variance(g)).epsilon(1e-10));
        CHECK(cache.variance(g) >= 0.0);
    }
    // batch field values agree with the single evaluator
    Eigen::MatrixXd modes = sample_mode_matrix(48, 5, 77u, 0u);
    Eigen::MatrixXd w = cache.field_on_grid(modes);
    ModeCoefficients col2;
    col2.values.assign(modes.col(2).data(), modes.col(2).data() + 48);
    CHECK(w(3, 2) == doctest::Approx(cache.field_at(col2, 3)).epsilon(1e-12));

    CHECK_THROWS_AS((void)cache.index_of({-0.3, 0.2}), Error);
    CHECK_THROWS_AS((void)cache.field_at(col2, cache.n_points()), Error);
}

TEST_CASE("mollified field covariance matches the mollified Green function") {
    DomainSpec sq = DomainSpec::rectangle(1.0, 1.0);
    SpectralBasis basis = build_basis(sq, 32);
    Mollifier moll(Mollifier::Profile::bump);
    MollifiedEigenCache cache(basis, moll, 0.15, 16, 16);
    int ga = 0, gb = cache.n_points() / 2;
    Point pa = cache.points()[static_cast<std::size_t>(ga)];
    Point pb = cache.points()[static_cast<std::size_t>(gb)];
    double target = mollified_green_spectral(basis, moll, 0.15, 0.15, pa, pb);

    const int n = 100000;
    Eigen::MatrixXd modes = sample_mode_matrix(32, n, 31337u, 0u);
    Eigen::MatrixXd w = cache.field_on_grid(modes);
    std::vector<double> prod(n);
    for (int i = 0; i < n; ++i) prod[static_cast<std::size_t>(i)] = w(ga, i) * w(gb, i);
    double cov = mean(prod);
    double sigma = std_error(prod);
    CHECK(std::abs(cov - target) < 3.0 * sigma);
}

TEST_CASE("sampled mollified field is grid-smooth") {
    DomainSpec sq = DomainSpec::rectangle(1.0, 1.0);
    SpectralBasis basis = build_basis(sq, 48);
    Mollifier moll(Mollifier::Profile::bump);
    MollifiedEigenCache cache(basis, moll, 0.1, 32, 32);
    ModeCoefficients xi = sample_modes(48, 2024u, 0u);
    double lip = cache.gradient_bound(xi);
    double h = 1.0 / 32;
    Eigen::MatrixXd modes(48, 1);
    for (int k = 0; k < 48; ++k) modes(k, 0) = xi.values[static_cast<std::size_t>(k)];
    Eigen::MatrixXd w = cache.field_on_grid(modes);
    // adjacent nodes differ by one grid index in the flat ordering
    for (int g = 0; g + 1 < cache.n_points(); ++g) {
        if (cache.grid_flat(g + 1) != cache.grid_flat(g) + 1) continue;
        CHECK(std::abs(w(g + 1, 0) - w(g, 0)) <= lip * h * (1.0 + 1e-9));
    }
}

TEST_CASE("cache CSV round trip") {
    DomainSpec sq = DomainSpec::rectangle(1.0, 1.0);
    SpectralBasis basis = build_basis(sq, 12);
    Mollifier moll(Mollifier::Profile::bump_sq);
    MollifiedEigenCache cache(basis, moll, 0.2, 10, 10);
    std::string path = "/tmp/sglab_test_cache.csv";
    cache.export_csv(path);
    MollifiedEigenCache back = MollifiedEigenCache::import_csv(path);
    CHECK(back.eps() == cache.eps());
    CHECK(back.n_points() == cache.n_points());
    CHECK(back.n_modes() == cache.n_modes());
    CHECK((back.table() - cache.table()).cwiseAbs().maxCoeff() < 1e-15);
    for (int g = 0; g < cache.n_points(); ++g)
        CHECK(back.variance(g) == doctest::Approx(cache.variance(g)).epsilon(1e-14));
}

TEST_CASE("bridge split: endpoints and variance additivity") {
    ModeCoefficients xi = sample_modes(16, 404u, 0u);

    BridgeSplit at1 = bridge_split(xi, 1.0, 11u, 0u);
    for (double v : at1.fresh.values) CHECK(v == 0.0);
    for (int k = 0; k < 16; ++k)
        CHECK(at1.mean[static_cast<std::size_t>(k)] ==
              doctest::Approx(xi.values[static_cast<std::size_t>(k)]).epsilon(1e-15));

    BridgeSplit at0 = bridge_split(xi, 0.0, 11u, 0u);
    for (double v : at0.mean) CHECK(v == 0.0);

    CHECK_THROWS_AS((void)bridge_split(xi, -0.1, 11u, 0u), Error);
    CHECK_THROWS_AS((void)bridge_split(xi, 1.1, 11u, 0u), Error);

    // reconstructed B_1 at t = 0.5 has unit variance per mode
    const int n = 1000000;
    std::vector<double> rec(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        ModeCoefficients outer = sample_modes(1, 555u, static_cast<std::uint64_t>(i));
        BridgeSplit s = bridge_split(outer, 0.5, 556u, static_cast<std::uint64_t>(i));
        rec[static_cast<std::size_t>(i)] = s.mean[0] + std::sqrt(0.5) * s.fresh.values[0];
    }
    CHECK(std::abs(mean(rec)) < 3e-3);
    CHECK(std::abs(variance(rec) - 1.0) < 5e-3);
}
