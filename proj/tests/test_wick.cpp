#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "wick.hpp"

using namespace sgl;

namespace {

struct Setup {
    DomainSpec domain = DomainSpec::rectangle(1.0, 1.0);
    SpectralBasis basis;
    Mollifier moll;
    MollifiedEigenCache cache;
    ScalarField rho;
    ScalarField psi;

    Setup(double eps = 0.1, int n_modes = 48, int grid = 24)
        : basis(build_basis(domain, n_modes)),
          moll(Mollifier::Profile::bump),
          cache(basis, moll, eps, grid, grid),
          rho(rho_bump({0.5, 0.5}, 0.3)),
          psi(psi_one()) {}
};

} // namespace

TEST_CASE("wick_cos and wick_sin pointwise") {
    CHECK(wick_cos(1.7, 2.3, 0.0) == 1.0);
    CHECK(wick_cos(0.0, 1.2, 0.8) == doctest::Approx(std::exp(0.5 * 0.64 * 1.2)).epsilon(1e-14));
    CHECK(wick_sin(0.0, 1.2, 0.8) == 0.0);
    CHECK_THROWS_AS((void)wick_cos(0.1, -1e-8, 1.0), Error);

    // E[wick_cos(X, v, beta)] = 1 for X ~ N(0, v) at matched variance
    const int n = 1000000;
    const double v = 1.7, beta = 1.0;
    std::vector<double> vals(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        RngStream rng(808u, static_cast<std::uint64_t>(i));
        vals[static_cast<std::size_t>(i)] = wick_cos(std::sqrt(v) * rng.normal(), v, beta);
    }
    double m = mean(vals), se = std_error(vals);
    CHECK(std::abs(m - 1.0) < 3.0 * se);
}

TEST_CASE("tested cosine: regime guard, coverage guard, beta = 0 value") {
    Setup s;
    CHECK_THROWS_AS((void)WickFunctional(s.cache, s.rho, s.psi, 1.5), Error); // beta^2 = 2.25
    ScalarField far = rho_bump({0.05, 0.05}, 0.02); // support outside Lambda_eps
    CHECK_THROWS_AS((void)WickFunctional(s.cache, far, s.psi, 1.0), Error);

    WickFunctional w0(s.cache, s.rho, s.psi, 0.0);
    ModeCoefficients xi = sample_modes(48, 3u, 0u);
    CHECK(w0.value(xi) == doctest::Approx(w0.integral_rho_psi()).epsilon(1e-14));
}

TEST_CASE("tested cosine: MC mean and uniform bound") {
    Setup s;
    double beta = 1.0;
    WickFunctional w(s.cache, s.rho, s.psi, beta);
    BoundsLedger ledger = w.ledger();
    CHECK(ledger.c_beta > 0.0);
    CHECK(ledger.c_uniform >= ledger.c_beta);

    const int n = 20000;
    Eigen::MatrixXd modes = sample_mode_matrix(48, n, 99191u, 0u);
    Eigen::VectorXd xi = w.cos_batch(modes);
    std::span<const double> xs(xi.data(), static_cast<std::size_t>(xi.size()));
    double m = mean(xs), se = std_error(xs);
    CHECK(std::abs(m - w.integral_rho_psi()) < 3.0 * se);
    CHECK(xi.cwiseAbs().maxCoeff() <= ledger.bound());
}

TEST_CASE("pointwise Wick normalization at probe nodes") {
    Setup s;
    double beta = 1.0;
    const int n = 20000;
    Eigen::MatrixXd modes = sample_mode_matrix(48, n, 2718u, 0u);
    Eigen::MatrixXd field = s.cache.field_on_grid(modes);
    for (int g = 0; g < s.cache.n_points(); g += s.cache.n_points() / 5) {
        std::vector<double> vals(n);
        for (int i = 0; i < n; ++i)
            vals[static_cast<std::size_t>(i)] = wick_cos(field(g, i), s.cache.variance(g), beta);
        double m = mean(vals), se = std_error(vals);
        CHECK(std::abs(m - 1.0) < 3.0 * se);
    }
}

TEST_CASE("chaos functional: Euler split and beta = 0") {
    Setup s;
    WickFunctional w(s.cache, s.rho, s.psi, 0.9);
    for (int i = 0; i < 100; ++i) {
        ModeCoefficients xi = sample_modes(48, 5150u, static_cast<std::uint64_t>(i));
        std::complex<double> chaos = w.chaos(xi);
        CHECK(chaos.real() == doctest::Approx(w.value(xi)).epsilon(1e-12));
        CHECK(chaos.imag() == doctest::Approx(w.sine(xi)).epsilon(1e-12));
    }
    WickFunctional w0(s.cache, s.rho, s.psi, 0.0);
    ModeCoefficients xi = sample_modes(48, 5151u, 0u);
    CHECK(w0.chaos(xi).real() == doctest::Approx(w0.integral_rho_psi()).epsilon(1e-14));
    CHECK(w0.chaos(xi).imag() == 0.0);
}

TEST_CASE("epsilon chain: coupled chaos differences decrease") {
    DomainSpec sq = DomainSpec::rectangle(1.0, 1.0);
    SpectralBasis basis = build_basis(sq, 64);
    Mollifier moll(Mollifier::Profile::bump);
    ScalarField rho = rho_bump({0.5, 0.5}, 0.3);
    ScalarField psi = psi_one();
    std::vector<double> eps = {0.2, 0.1, 0.05, 0.025};
    const int n = 2000;
    Eigen::MatrixXd modes = sample_mode_matrix(64, n, 777u, 0u);

    std::vector<Eigen::VectorXd> re, im;
    for (double e : eps) {
        MollifiedEigenCache cache(basis, moll, e, 32, 32);
        WickFunctional w(cache, rho, psi, 1.0);
        Eigen::MatrixXd field = w.field(modes);
        Eigen::VectorXd r(n), s_(n);
        for (int i = 0; i < n; ++i) {
            r(i) = w.cos_value(field.col(i));
            s_(i) = w.sin_value(field.col(i));
        }
        re.push_back(r);
        im.push_back(s_);
    }
    double prev = 1e300;
    for (std::size_t j = 0; j + 1 < eps.size(); ++j) {
        double diff2 = ((re[j] - re[j + 1]).squaredNorm() + (im[j] - im[j + 1]).squaredNorm()) / n;
        CHECK(diff2 < prev);
        prev = diff2;
    }
}

TEST_CASE("phase functional: zero theta, half-angle identity, decomposition") {
    Setup s;
    double beta = 1.0;
    WickFunctional w(s.cache, s.rho, psi_one(), beta);
    ThetaFunctional f0(w, theta_zero());
    ModeCoefficients xi = sample_modes(48, 31u, 0u);
    CHECK(f0.value(xi) == 0.0);

    ScalarField theta = theta_bump({0.5, 0.5}, 0.4, 1.3);
    ThetaFunctional f(w, theta);

    // pointwise half-angle identity at the active nodes
    Eigen::MatrixXd one_col(48, 1);
    for (int k = 0; k < 48; ++k) one_col(k, 0) = xi.values[static_cast<std::size_t>(k)];
    Eigen::VectorXd field = w.field(one_col).col(0);
    const auto& nodes = w.active_nodes();
    for (int a = 0; a < w.n_active(); a += 3) {
        Point p = s.cache.points()[static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)])];
        double th = theta.eval(p);
        double wk = field(a);
        double v = s.cache.variance(nodes[static_cast<std::size_t>(a)]);
        double lhs = std::exp(0.5 * beta * beta * v) * (std::cos(beta * wk + th) - std::cos(beta * wk));
        double rhs = -2.0 * std::exp(0.5 * beta * beta * v) * std::sin(beta * wk + 0.5 * th) *
                     std::sin(0.5 * th);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }

    // F = (  <[[sin]], rho>_{sin theta dx} + <[[cos]], rho>_{(1 - cos theta) dx} ) / 2
    ScalarField mu1 = psi_one();
    mu1.name = "sin_theta";
    auto theta_eval = theta.eval;
    mu1.eval = [theta_eval](Point p) { return std::sin(theta_eval(p)); };
    ScalarField mu2 = psi_one();
    mu2.name = "one_minus_cos_theta";
    mu2.eval = [theta_eval](Point p) { return 1.0 - std::cos(theta_eval(p)); };
    WickFunctional w_mu1(s.cache, s.rho, mu1, beta);
    WickFunctional w_mu2(s.cache, s.rho, mu2, beta);
    for (int i = 0; i < 50; ++i) {
        ModeCoefficients m = sample_modes(48, 747u, static_cast<std::uint64_t>(i));
        double direct = f.value(m);
        double split = 0.5 * (w_mu1.sine(m) + w_mu2.value(m));
        CHECK(direct == doctest::Approx(split).epsilon(1e-10));
    }
}

TEST_CASE("phase functional is Lipschitz in theta") {
    Setup s;
    double beta = 1.0;
    WickFunctional w(s.cache, s.rho, psi_one(), beta);
    ScalarField t1 = theta_bump({0.5, 0.5}, 0.4, 1.0);
    ScalarField t2 = theta_bump({0.5, 0.5}, 0.4, 0.6);
    ThetaFunctional f1(w, t1), f2(w, t2);
    double lip = 2.0 * w.ledger().b_rho * w.ledger().c_beta;
    double dtheta = 0.4; // sup |t1 - t2| = amplitude gap at the bump peak
    for (int i = 0; i < 50; ++i) {
        ModeCoefficients m = sample_modes(48, 321u, static_cast<std::uint64_t>(i));
        CHECK(std::abs(f1.value(m) - f2.value(m)) <= lip * dtheta + 1e-12);
    }
    CHECK(f1.bound() >= 0.0);
}

TEST_CASE("mollifier independence: two profiles agree within noise") {
    DomainSpec sq = DomainSpec::rectangle(1.0, 1.0);
    SpectralBasis basis = build_basis(sq, 48);
    ScalarField rho = rho_bump({0.5, 0.5}, 0.3);
    const int n = 5000;
    Eigen::MatrixXd modes = sample_mode_matrix(48, n, 1999u, 0u);

    double prev_rms = 1e300;
    for (double eps : {0.2, 0.1, 0.05}) {
        Mollifier ma(Mollifier::Profile::bump);
        Mollifier mb(Mollifier::Profile::bump_sq);
        MollifiedEigenCache ca(basis, ma, eps, 32, 32);
        MollifiedEigenCache cb(basis, mb, eps, 32, 32);
        WickFunctional wa(ca, rho, psi_one(), 1.0);
        WickFunctional wb(cb, rho, psi_one(), 1.0);
        Eigen::VectorXd xa = wa.cos_batch(modes);
        Eigen::VectorXd xb = wb.cos_batch(modes);
        std::span<const double> sa(xa.data(), static_cast<std::size_t>(n));
        std::span<const double> sb(xb.data(), static_cast<std::size_t>(n));
        double gap = std::abs(mean(sa) - mean(sb));
        double sigma = std::hypot(std_error(sa), std_error(sb));
        CHECK(gap < 3.0 * sigma);
        double rms = std::sqrt((xa - xb).squaredNorm() / n);
        CHECK(rms < prev_rms);
        prev_rms = rms;
    }
}

TEST_CASE("grid-table test function from CSV") {
    std::string path = "/tmp/sglab_test_rho.csv";
    {
        std::ofstream out(path);
        out << "# x,y,value\n";
        out << "0.25,0.5,1.0\n0.5,0.5,0.5\n0.75,0.5,0.25\n";
    }
    ScalarField f = rho_from_csv(path, 1e-6);
    CHECK(f.bound == 1.0);
    CHECK(f.eval({0.5, 0.5}) == 0.5);
    CHECK(f.eval({0.1, 0.1}) == 0.0);
}
