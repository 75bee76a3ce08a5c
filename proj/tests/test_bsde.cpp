#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bsde.hpp"

using namespace sgl;

namespace {

struct Setup {
    DomainSpec domain = DomainSpec::rectangle(1.0, 1.0);
    SpectralBasis basis;
    Mollifier moll;
    std::shared_ptr<MollifiedEigenCache> cache;
    std::shared_ptr<WickFunctional> wick;

    Setup(int n_modes = 16, int grid = 16, double eps = 0.1, double beta = 1.0)
        : basis(build_basis(domain, n_modes)), moll(Mollifier::Profile::bump) {
        cache = std::make_shared<MollifiedEigenCache>(basis, moll, eps, grid, grid);
        wick = std::make_shared<WickFunctional>(*cache, rho_bump({0.5, 0.5}, 0.3), psi_one(), beta);
    }
};

std::shared_ptr<TerminalFunctional> negate(std::shared_ptr<const TerminalFunctional> base) {
    auto fn = [base](const Eigen::VectorXd& modes) { return -base->eval(modes); };
    return std::make_shared<CustomTerminal>(fn, base->bound(), base->n_modes());
}

} // namespace

TEST_CASE("bmo constants: reference values and validity edge") {
    CHECK(bmo_kappa(2.0) == doctest::Approx(0.049460).epsilon(1e-4));
    BmoConstants c = bmo_constants(1.1, 0.05);
    CHECK(c.K_valid);
    CHECK(c.K == doctest::Approx(2.465).epsilon(1e-3));
    BmoConstants bad = bmo_constants(2.0, 1.0);
    CHECK_FALSE(bad.K_valid);
    CHECK(std::isinf(bad.K));
    CHECK_THROWS_AS((void)bmo_kappa(1.0), Error);
    CHECK_THROWS_AS((void)bmo_constants(0.5, 0.1), Error);
    CHECK_THROWS_AS((void)bmo_constants(2.0, -0.1), Error);
}

TEST_CASE("kappa is strictly decreasing and p_bar inverts it") {
    double prev = bmo_kappa(1.01);
    for (double p = 1.5; p <= 50.0; p += 0.5) {
        double k = bmo_kappa(p);
        CHECK(k < prev);
        prev = k;
    }
    for (double a : {0.05, 0.2, 1.0}) {
        BmoConstants c = bmo_constants(2.0, a);
        CHECK(bmo_kappa(c.p_bar) == doctest::Approx(a).epsilon(1e-10));
    }
    // the reverse Holder validity edge is consistent with K
    double a = 0.3;
    double pmax = bmo_max_valid_p(a);
    CHECK(bmo_constants(1.0 + 0.5 * (pmax - 1.0), a).K_valid);
    CHECK_FALSE(bmo_constants(pmax + 0.1 * (pmax - 1.0), a).K_valid);
}

TEST_CASE("cole-hopf: deterministic, beta = 0, and Gaussian closed form") {
    ConstantTerminal c7(0.7, 4);
    for (double alpha : {-1.0, 0.0, 2.0}) {
        Estimate e = cole_hopf_y0(c7, alpha, 100, 1u);
        CHECK(e.value == doctest::Approx(0.7).epsilon(1e-12));
        CHECK(e.std_err == doctest::Approx(0.0));
    }

    Setup s(16, 16, 0.1, 0.0); // beta = 0 wick terminal is deterministic
    WickCosineTerminal t0(s.wick);
    Estimate e0 = cole_hopf_y0(t0, 1.3, 64, 2u);
    CHECK(e0.value == doctest::Approx(s.wick->integral_rho_psi()).epsilon(1e-12));

    // linear terminal sigma * B_1^1: Y_0 = alpha sigma^2 / 2
    double sigma = 0.8, alpha = 0.9;
    LinearModeTerminal lin(sigma, 1, 4);
    Estimate el = cole_hopf_y0(lin, alpha, 400000, 3u);
    CHECK(std::abs(el.value - alpha * sigma * sigma / 2.0) < 3.0 * el.std_err);
}

TEST_CASE("conditional value: endpoints and tower property") {
    Setup s;
    WickCosineTerminal terminal(s.wick);
    double alpha = 1.0;

    ModeCoefficients xi = sample_modes(16, 10u, 0u);
    Eigen::Map<const Eigen::VectorXd> b1(xi.values.data(), 16);
    CHECK(conditional_y(terminal, alpha, 1.0, b1, 10, 11u) ==
          doctest::Approx(terminal.eval(b1)).epsilon(1e-14));
    CHECK_THROWS_AS((void)conditional_y(terminal, alpha, 1.5, b1, 10, 11u), Error);

    Eigen::VectorXd zero = Eigen::VectorXd::Zero(16);
    double y_t0 = conditional_y(terminal, alpha, 0.0, zero, 60000, 12u);
    Estimate y0 = cole_hopf_y0(terminal, alpha, 60000, 13u);
    CHECK(std::abs(y_t0 - y0.value) < 4.0 * y0.std_err);

    // exp(alpha Y_t) is a martingale: nested estimate vs direct at t = 0.5
    const int outer = 2000, inner = 500;
    std::vector<double> vals(outer);
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < outer; ++i) {
        ModeCoefficients om = sample_modes(16, 14u, static_cast<std::uint64_t>(i));
        Eigen::Map<const Eigen::VectorXd> m(om.values.data(), 16);
        Eigen::VectorXd b_t = std::sqrt(0.5) * m;
        double y = conditional_y(terminal, alpha, 0.5, b_t, inner,
                                 derive_seed(15u, static_cast<std::uint64_t>(i)));
        vals[static_cast<std::size_t>(i)] = std::exp(alpha * y);
    }
    double m_tower = mean(vals), se_tower = std_error(vals);
    Estimate ch = cole_hopf_y0(terminal, alpha, 100000, 16u);
    double ref = std::exp(alpha * ch.value);
    double se_ref = std::abs(alpha) * ref * ch.std_err;
    CHECK(std::abs(m_tower - ref) < 3.0 * std::hypot(se_tower, se_ref));
}

TEST_CASE("zeta coefficients: deterministic, linear, and Richardson order") {
    ConstantTerminal c2(2.0, 6);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(6);
    Eigen::VectorXd z = zeta_coefficients(c2, 1.0, 0.5, b, 1e-4, 200, 21u);
    CHECK(z.cwiseAbs().maxCoeff() == doctest::Approx(0.0));

    double sigma = 1.3;
    LinearModeTerminal lin(sigma, 1, 6);
    Eigen::VectorXd b2 = Eigen::VectorXd::Constant(6, 0.4);
    Eigen::VectorXd zl = zeta_coefficients(lin, 0.7, 0.5, b2, 1e-4, 400, 22u);
    CHECK(zl(0) == doctest::Approx(sigma).epsilon(1e-8));
    for (int k = 1; k < 6; ++k) CHECK(std::abs(zl(k)) < 1e-8);

    CHECK_THROWS_AS((void)zeta_coefficients(lin, 0.7, 0.5, b2, 1e-9, 10, 23u), Error);

    // central differences are second order: Richardson residual drops ~4x
    auto tanh1 = f_tanh_mode(1, 6);
    auto fd = [&](double h) {
        return zeta_coefficients(*tanh1, 1.0, 0.5, b2, h, 4000, 24u)(0);
    };
    double z_h = fd(0.4), z_h2 = fd(0.2), z_h4 = fd(0.1);
    double r1 = std::abs(z_h - z_h2);
    double r2 = std::abs(z_h2 - z_h4);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.35));
}

TEST_CASE("regression solver: deterministic terminal is exact") {
    ConstantTerminal c3(3.0, 8);
    BsdeSolution sol = solve_bsde_regression(c3, 1.2, 8, 600, 31u);
    CHECK(sol.y0 == doctest::Approx(3.0).epsilon(1e-12));
    CHECK((sol.y.array() - 3.0).abs().maxCoeff() < 1e-10);
    for (double r : sol.residual_rms) CHECK(r < 1e-10);
    for (double ssz : sol.mean_sumsq_zeta) CHECK(ssz < 1e-20);
}

TEST_CASE("regression solver agrees with Cole-Hopf on the wick terminal") {
    Setup s;
    WickCosineTerminal terminal(s.wick);
    double alpha = 1.0;
    BsdeSolution sol = solve_bsde_regression(terminal, alpha, 16, 4000, 32u);
    Estimate ch = cole_hopf_y0(terminal, alpha, 200000, 33u);
    double tol = 2e-2 + 3.0 * std::hypot(sol.y0_std_err, ch.std_err);
    CHECK(std::abs(sol.y0 - ch.value) < tol);
    // terminal condition matched exactly and the comparison bound holds
    CHECK(sol.max_abs_y() <= terminal.bound() * (1.0 + 1e-12));
    CHECK(sol.times.front() == 0.0);
    CHECK(sol.times.back() == 1.0);
}

TEST_CASE("regression solver: sign-flip antisymmetry") {
    Setup s;
    auto terminal = std::make_shared<WickCosineTerminal>(s.wick);
    auto neg = negate(terminal);
    double alpha = 0.8;
    RegressionSpec spec;
    spec.store_zeta_paths = true;
    BsdeSolution a = solve_bsde_regression(*terminal, alpha, 6, 800, 41u, spec);
    BsdeSolution b = solve_bsde_regression(*neg, -alpha, 6, 800, 41u, spec);
    CHECK((a.y + b.y).cwiseAbs().maxCoeff() < 1e-10);
    // the fitted zeta paths negate; the coefficient representation lives in a
    // different basis (the terminal feature itself flips sign)
    for (std::size_t i = 0; i < a.zeta_paths.size(); ++i)
        CHECK((a.zeta_paths[i] + b.zeta_paths[i]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("regression solver rejects starved designs") {
    ConstantTerminal c1(1.0, 8);
    CHECK_THROWS_AS((void)solve_bsde_regression(c1, 1.0, 4, 30, 42u), Error);
}

TEST_CASE("tilt weights: normalization, split batch, p-th moment") {
    Setup s(16, 16, 0.1, 0.5);
    WickCosineTerminal terminal(s.wick);

    TiltWeight flat = tilt_weights(terminal, 0.0, 1000, 51u);
    CHECK((flat.gamma.array() - 1.0).abs().maxCoeff() == doctest::Approx(0.0));

    double alpha = 0.2;
    TiltWeight tilt = tilt_weights(terminal, alpha, 20000, 52u);
    CHECK(tilt.gamma.minCoeff() > 0.0);
    CHECK(tilt.gamma.mean() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(tilt.split_mean - 1.0) < 3.0 * tilt.split_std_err);

    // reverse Holder: E[Gamma^p] <= K(p, a) for a valid p
    double bound = s.wick->ledger().bound();
    double a = M_SQRT2 * std::exp(0.5 * std::abs(alpha) * bound);
    double pmax = bmo_max_valid_p(a);
    REQUIRE(pmax > 1.0 + 1e-12);
    double p = 1.0 + 0.5 * (pmax - 1.0);
    BmoConstants c = bmo_constants(p, a);
    REQUIRE(c.K_valid);
    Estimate pm = tilt_p_moment(tilt, p);
    CHECK(pm.value <= c.K + 3.0 * pm.std_err);
}

TEST_CASE("tilted expectation: unit functional and alpha = 0") {
    Setup s;
    WickCosineTerminal terminal(s.wick);
    ConstantTerminal one(1.0, 16);
    Estimate e1 = sg_expectation(one, terminal, 1.0, 5000, 61u);
    CHECK(e1.value == doctest::Approx(1.0).epsilon(1e-12));

    auto f = f_tanh_mode(2, 16);
    Estimate plain = sg_expectation(*f, terminal, 0.0, 20000, 62u);
    Eigen::VectorXd fv = terminal_samples(*f, 20000, 62u, 0u);
    CHECK(plain.value == doctest::Approx(fv.mean()).epsilon(1e-12));
}

TEST_CASE("first-order expansion of Y0 in the shifted terminal") {
    Setup s;
    auto terminal = std::make_shared<WickCosineTerminal>(s.wick);
    double alpha = 1.0;
    const int n = 50000;
    Eigen::VectorXd t = terminal_samples(*terminal, n, 71u, 0u);

    std::vector<std::shared_ptr<TerminalFunctional>> fs = {
        f_cos_field_at(s.cache, s.cache->points()[static_cast<std::size_t>(s.cache->n_points() / 2)]),
        f_tanh_mode(1, 16)};
    for (const auto& f : fs) {
        Eigen::VectorXd fv = terminal_samples(*f, n, 71u, 0u);
        Estimate base = cole_hopf_from_values(t, alpha);
        Eigen::VectorXd w = (alpha * t.array()).exp();
        double sg = w.dot(fv) / w.sum();
        std::vector<double> remainders;
        for (double d : {0.4, 0.2, 0.1, 0.05}) {
            Estimate shifted = cole_hopf_from_values(t + d * fv, alpha);
            remainders.push_back(std::abs(shifted.value - base.value - d * sg) / (d * d));
        }
        double rmax = *std::max_element(remainders.begin(), remainders.end());
        double rmin = *std::min_element(remainders.begin(), remainders.end());
        CHECK(rmax / rmin < 4.0);
    }
}

TEST_CASE("bmo bound check: deterministic and wick terminals") {
    ConstantTerminal c1(1.0, 8);
    BsdeSolution flat = solve_bsde_regression(c1, 1.0, 6, 600, 81u);
    BoundsLedger ledger;
    ledger.b_rho = 1.0;
    ledger.b_psi = 1.0;
    ledger.c_beta = 1.0;
    BmoCheckReport rep = bmo_bound_check(flat, ledger);
    CHECK(rep.passed);
    for (double m : rep.max_estimate) CHECK(m < 1e-12);

    Setup s;
    WickCosineTerminal terminal(s.wick);
    BsdeSolution sol = solve_bsde_regression(terminal, 1.0, 8, 2000, 82u);
    BoundsLedger wl = s.wick->ledger();
    BmoCheckReport wrep = bmo_bound_check(sol, wl);
    CHECK(wrep.passed);
    // enlarging the declared functional bound only loosens the check
    BoundsLedger wider = wl;
    wider.b_F = 2.0;
    BmoCheckReport wrep2 = bmo_bound_check(sol, wider);
    CHECK(wrep2.bound > wrep.bound);
    CHECK(wrep2.passed);
}

TEST_CASE("epsilon sweep produces a coupled table") {
    DomainSpec sq = DomainSpec::rectangle(1.0, 1.0);
    SpectralBasis basis = build_basis(sq, 32);
    Mollifier moll(Mollifier::Profile::bump);
    SweepTable table = epsilon_sweep(basis, moll, rho_bump({0.5, 0.5}, 0.3), psi_one(), 0.5, 1.0,
                                     {0.2, 0.1, 0.05}, 24, 24, 4000, 91u);
    CHECK(table.rows.size() == 3);
    CHECK(table.f_names.size() == 3);
    for (const auto& row : table.rows) {
        CHECK(row.f_expectations.size() == 3);
        CHECK(std::abs(row.gamma_split_mean - 1.0) < 3.0 * row.gamma_split_std_err);
        // bounded functionals stay bounded under the tilt
        for (const auto& e : row.f_expectations) CHECK(std::abs(e.value) <= 1.0 + 3.0 * e.std_err);
    }
    CHECK(table.rows[1].diff_prev > 0.0);
    CHECK_THROWS_AS((void)epsilon_sweep(basis, moll, rho_bump({0.5, 0.5}, 0.3), psi_one(), 0.5, 1.0,
                                        {0.1, 0.2}, 24, 24, 100, 91u),
                    Error);
}
