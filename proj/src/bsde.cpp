#include "bsde.hpp"

#include <algorithm>
#include <cmath>

namespace sgl {

std::shared_ptr<TerminalFunctional> f_cos_field_at(std::shared_ptr<const MollifiedEigenCache> cache,
                                                   Point probe) {
    int g = cache->index_of(probe);
    Eigen::VectorXd row(cache->n_modes());
    for (int k = 1; k <= cache->n_modes(); ++k)
        row(k - 1) = cache->table()(g, k - 1) * std::sqrt(2.0 * M_PI * cache->lambda(k));
    auto fn = [cache, row](const Eigen::VectorXd& modes) { return std::cos(row.dot(modes)); };
    return std::make_shared<CustomTerminal>(fn, 1.0, cache->n_modes());
}

std::shared_ptr<TerminalFunctional> f_tanh_mode(int mode, int n_modes) {
    auto fn = [mode](const Eigen::VectorXd& modes) { return std::tanh(modes(mode - 1)); };
    return std::make_shared<CustomTerminal>(fn, 1.0, n_modes);
}

std::shared_ptr<TerminalFunctional> f_scaled_sine(std::shared_ptr<const WickFunctional> functional) {
    double scale = functional->ledger().bound();
    auto fn = [functional, scale](const Eigen::VectorXd& modes) {
        return functional->sin_value(functional->field(modes).col(0)) / scale;
    };
    return std::make_shared<CustomTerminal>(fn, 1.0, functional->cache().n_modes());
}

Eigen::VectorXd terminal_samples(const TerminalFunctional& terminal, int samples,
                                 std::uint64_t seed, std::uint64_t first_stream) {
    if (samples < 1) throw Error(ErrorCode::invalid_argument, "sample count must be >= 1");
    const int block = 8192;
    Eigen::VectorXd out(samples);
    for (int j0 = 0; j0 < samples; j0 += block) {
        int bs = std::min(block, samples - j0);
        Eigen::MatrixXd modes =
            sample_mode_matrix(terminal.n_modes(), bs, seed, first_stream + static_cast<std::uint64_t>(j0));
        out.segment(j0, bs) = terminal.eval_batch(modes);
    }
    return out;
}

Estimate cole_hopf_from_values(const Eigen::VectorXd& values, double alpha) {
    std::span<const double> v(values.data(), static_cast<std::size_t>(values.size()));
    if (alpha == 0.0) return {mean(v), values.size() > 1 ? std_error(v) : 0.0};
    Eigen::VectorXd e = (alpha * values.array()).exp();
    std::span<const double> es(e.data(), static_cast<std::size_t>(e.size()));
    double m = mean(es);
    double se = values.size() > 1 ? std_error(es) : 0.0;
    return {std::log(m) / alpha, se / (std::abs(alpha) * m)};
}

Estimate cole_hopf_y0(const TerminalFunctional& terminal, double alpha, int samples,
                      std::uint64_t seed, std::uint64_t first_stream) {
    return cole_hopf_from_values(terminal_samples(terminal, samples, seed, first_stream), alpha);
}

namespace {

double log_mean_exp(const TerminalFunctional& terminal, double alpha, const Eigen::MatrixXd& modes) {
    Eigen::VectorXd t = terminal.eval_batch(modes);
    if (alpha == 0.0) return t.mean();
    double m = (alpha * t.array()).exp().mean();
    return std::log(m) / alpha;
}

Eigen::MatrixXd shifted_inner_matrix(const Eigen::VectorXd& b_t, double t,
                                     const Eigen::MatrixXd& fresh) {
    Eigen::MatrixXd m = std::sqrt(1.0 - t) * fresh;
    m.colwise() += b_t;
    return m;
}

} // namespace

double conditional_y(const TerminalFunctional& terminal, double alpha, double t,
                     const Eigen::VectorXd& b_t, int inner_samples, std::uint64_t seed,
                     std::uint64_t stream) {
    if (!(t >= 0.0 && t <= 1.0))
        throw Error(ErrorCode::parameter_out_of_range, "conditioning time must lie in [0,1]");
    if (t == 1.0) return terminal.eval(b_t);
    Eigen::MatrixXd fresh =
        sample_mode_matrix(terminal.n_modes(), inner_samples, derive_seed(seed, 0xC0D1u), stream);
    return log_mean_exp(terminal, alpha, shifted_inner_matrix(b_t, t, fresh));
}

Eigen::VectorXd zeta_coefficients(const TerminalFunctional& terminal, double alpha, double t,
                                  const Eigen::VectorXd& b_t, double bump, int inner_samples,
                                  std::uint64_t seed, std::uint64_t stream) {
    if (!(bump >= 1e-8))
        throw Error(ErrorCode::degenerate_bump, "finite-difference step below 1e-8");
    if (!(t >= 0.0 && t <= 1.0))
        throw Error(ErrorCode::parameter_out_of_range, "conditioning time must lie in [0,1]");
    int n = terminal.n_modes();
    // common random numbers across all bumped evaluations
    Eigen::MatrixXd fresh;
    if (t < 1.0)
        fresh = sample_mode_matrix(n, inner_samples, derive_seed(seed, 0xC0D1u), stream);
    auto value_at = [&](const Eigen::VectorXd& b) {
        if (t == 1.0) return terminal.eval(b);
        return log_mean_exp(terminal, alpha, shifted_inner_matrix(b, t, fresh));
    };
    Eigen::VectorXd zeta(n);
    Eigen::VectorXd b = b_t;
    for (int k = 0; k < n; ++k) {
        double saved = b(k);
        b(k) = saved + bump;
        double up = value_at(b);
        b(k) = saved - bump;
        double down = value_at(b);
        b(k) = saved;
        zeta(k) = (up - down) / (2.0 * bump);
    }
    return zeta;
}

BsdeSolution solve_bsde_regression(const TerminalFunctional& terminal, double alpha, int n_steps,
                                   int n_paths, std::uint64_t seed, const RegressionSpec& spec) {
    if (n_steps < 1) throw Error(ErrorCode::invalid_argument, "time grid needs at least 2 points");
    int n = terminal.n_modes();
    int lead = std::min(spec.leading_modes, n);
    int q_y = 1 + lead + lead * (lead + 1) / 2 + (spec.terminal_feature ? 1 : 0);
    // zeta regressions use the compact basis: the wide quadratic basis would
    // inflate the fitted |zeta|^2 by its projection noise, which feeds the driver
    int q_z = 1 + lead + (spec.terminal_feature ? 1 : 0);
    if (n_paths < 2 * q_y)
        throw Error(ErrorCode::singular_regression,
                    "regression needs at least twice as many paths as features");
    double dt = 1.0 / n_steps;
    std::uint64_t inc_seed = derive_seed(seed, 0xB5DEu);

    // Brownian mode paths at the grid times
    std::vector<Eigen::MatrixXd> b(static_cast<std::size_t>(n_steps) + 1);
    b[0] = Eigen::MatrixXd::Zero(n, n_paths);
    for (int i = 0; i < n_steps; ++i) {
        Eigen::MatrixXd inc = sample_mode_matrix(
            n, n_paths, inc_seed, static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n_paths));
        b[static_cast<std::size_t>(i) + 1] = b[static_cast<std::size_t>(i)] + std::sqrt(dt) * inc;
    }

    BsdeSolution sol;
    sol.alpha = alpha;
    sol.terminal_bound = terminal.bound();
    sol.times.resize(static_cast<std::size_t>(n_steps) + 1);
    for (int i = 0; i <= n_steps; ++i) sol.times[static_cast<std::size_t>(i)] = dt * i;
    sol.y.resize(n_paths, n_steps + 1);
    sol.zeta_coef.resize(static_cast<std::size_t>(n_steps));
    if (spec.store_zeta_paths) sol.zeta_paths.resize(static_cast<std::size_t>(n_steps));
    sol.residual_rms.resize(static_cast<std::size_t>(n_steps));
    sol.mean_sumsq_zeta.resize(static_cast<std::size_t>(n_steps));
    sol.tail_qv_fit.resize(n_paths, n_steps);
    sol.tail_qv_se.resize(static_cast<std::size_t>(n_steps));

    Eigen::VectorXd y_next = terminal.eval_batch(b[static_cast<std::size_t>(n_steps)]);
    sol.y.col(n_steps) = y_next;

    Eigen::VectorXd tail_qv = Eigen::VectorXd::Zero(n_paths);
    double y0_se = 0.0;

    for (int i = n_steps - 1; i >= 0; --i) {
        const Eigen::MatrixXd& state = b[static_cast<std::size_t>(i)];
        Eigen::MatrixXd x_y(n_paths, q_y);
        Eigen::MatrixXd x_z(n_paths, q_z);
        x_y.col(0).setOnes();
        x_z.col(0).setOnes();
        for (int k = 0; k < lead; ++k) {
            x_y.col(1 + k) = state.row(k).transpose();
            x_z.col(1 + k) = state.row(k).transpose();
        }
        int col = 1 + lead;
        for (int a = 0; a < lead; ++a)
            for (int c = a; c < lead; ++c)
                x_y.col(col++) = state.row(a).transpose().cwiseProduct(state.row(c).transpose());
        if (spec.terminal_feature) {
            Eigen::VectorXd feat = terminal.eval_batch(state);
            x_y.col(q_y - 1) = feat;
            x_z.col(q_z - 1) = feat;
        }

        // Ridge-stabilized normal equations on mean-centered features, with an
        // exact (unpenalized) intercept. The unpivoted factorization keeps the
        // solve exactly equivariant under sign flips of feature columns, which
        // is what makes the (alpha, terminal) negation symmetry hold to
        // machine precision.
        struct RidgeFit {
            Eigen::MatrixXd xc;
            Eigen::RowVectorXd col_mean;
            Eigen::LLT<Eigen::MatrixXd> llt;

            void build(const Eigen::MatrixXd& x_with_intercept) {
                Eigen::Index q = x_with_intercept.cols() - 1;
                xc = x_with_intercept.rightCols(q);
                col_mean = xc.colwise().mean();
                xc.rowwise() -= col_mean;
                Eigen::MatrixXd gram = xc.transpose() * xc;
                double ridge = 1e-10 * (gram.trace() / std::max<Eigen::Index>(q, 1) + 1.0);
                gram.diagonal().array() += ridge;
                llt.compute(gram);
                if (llt.info() != Eigen::Success)
                    throw Error(ErrorCode::singular_regression, "normal equations not positive definite");
            }
            // fitted conditional expectation of each target column
            Eigen::MatrixXd fitted(const Eigen::MatrixXd& targets) const {
                Eigen::RowVectorXd t_mean = targets.colwise().mean();
                Eigen::MatrixXd tc = targets.rowwise() - t_mean;
                Eigen::MatrixXd coef = llt.solve(xc.transpose() * tc);
                Eigen::MatrixXd out = xc * coef;
                out.rowwise() += t_mean;
                return out;
            }
        };
        RidgeFit fit_y, fit_z;
        fit_y.build(x_y);
        fit_z.build(x_z);

        Eigen::VectorXd cond_e = fit_y.fitted(y_next);
        Eigen::VectorXd centered = y_next - cond_e;

        Eigen::MatrixXd db = b[static_cast<std::size_t>(i) + 1] - state; // n x paths
        Eigen::MatrixXd rhs(n_paths, n);
        for (int k = 0; k < n; ++k)
            rhs.col(k) = centered.cwiseProduct(db.row(k).transpose()) / dt;
        Eigen::MatrixXd zeta = fit_z.fitted(rhs); // paths x n
        // coefficient record: row 0 is the intercept (target means over the
        // centered design), remaining rows the centered-feature coefficients
        Eigen::MatrixXd beta_z(q_z, n);
        beta_z.row(0) = rhs.colwise().mean();
        beta_z.bottomRows(q_z - 1) =
            fit_z.llt.solve(fit_z.xc.transpose() * (rhs.rowwise() - rhs.colwise().mean()));

        Eigen::VectorXd sumsq = zeta.rowwise().squaredNorm();
        Eigen::VectorXd y_i = cond_e + (0.5 * alpha * dt) * sumsq;

        Eigen::VectorXd mart(n_paths);
        for (int p = 0; p < n_paths; ++p) mart(p) = zeta.row(p).dot(db.col(p));
        Eigen::VectorXd resid = centered - mart;
        sol.residual_rms[static_cast<std::size_t>(i)] = std::sqrt(resid.squaredNorm() / n_paths);
        sol.mean_sumsq_zeta[static_cast<std::size_t>(i)] = sumsq.mean();

        tail_qv += dt * sumsq;
        Eigen::VectorXd tqv_fit = fit_z.fitted(tail_qv);
        sol.tail_qv_fit.col(i) = tqv_fit;
        std::span<const double> tspan(tail_qv.data(), static_cast<std::size_t>(tail_qv.size()));
        sol.tail_qv_se[static_cast<std::size_t>(i)] = std_error(tspan);

        sol.zeta_coef[static_cast<std::size_t>(i)] = beta_z;
        if (spec.store_zeta_paths) sol.zeta_paths[static_cast<std::size_t>(i)] = zeta;
        sol.y.col(i) = y_i;
        if (i == 0) {
            std::span<const double> cs(centered.data(), static_cast<std::size_t>(centered.size()));
            y0_se = std_error(cs);
        }
        y_next = y_i;
    }
    sol.y0 = y_next.mean();
    sol.y0_std_err = y0_se;
    return sol;
}

TiltWeight tilt_weights(const TerminalFunctional& terminal, double alpha, int samples,
                        std::uint64_t seed, std::uint64_t first_stream) {
    if (samples < 2) throw Error(ErrorCode::invalid_argument, "tilt weights need >= 2 samples");
    Eigen::VectorXd t = terminal_samples(terminal, samples, seed, first_stream);
    Eigen::VectorXd e = (alpha * t.array()).exp();
    std::span<const double> es(e.data(), static_cast<std::size_t>(e.size()));
    TiltWeight w;
    w.normalizer = mean(es);
    w.gamma = e / w.normalizer;

    int half = samples / 2;
    std::span<const double> h1(e.data(), static_cast<std::size_t>(half));
    std::span<const double> h2(e.data() + half, static_cast<std::size_t>(samples - half));
    double m1 = mean(h1), m2 = mean(h2);
    double s1 = std_error(h1), s2 = std_error(h2);
    w.split_mean = m2 / m1;
    w.split_std_err = w.split_mean * std::sqrt((s1 / m1) * (s1 / m1) + (s2 / m2) * (s2 / m2));
    return w;
}

Estimate tilt_p_moment(const TiltWeight& tilt, double p) {
    Eigen::VectorXd g = tilt.gamma.array().pow(p);
    std::span<const double> gs(g.data(), static_cast<std::size_t>(g.size()));
    return {mean(gs), std_error(gs)};
}

Estimate sg_expectation(const TerminalFunctional& f, const TerminalFunctional& terminal,
                        double alpha, int samples, std::uint64_t seed, std::uint64_t first_stream) {
    const int block = 8192;
    Eigen::VectorXd tv(samples), fv(samples);
    for (int j0 = 0; j0 < samples; j0 += block) {
        int bs = std::min(block, samples - j0);
        Eigen::MatrixXd modes = sample_mode_matrix(terminal.n_modes(), bs, seed,
                                                   first_stream + static_cast<std::uint64_t>(j0));
        tv.segment(j0, bs) = terminal.eval_batch(modes);
        fv.segment(j0, bs) = f.eval_batch(modes);
    }
    Eigen::VectorXd w = (alpha * tv.array()).exp();
    double wm = w.mean();
    double value = w.dot(fv) / (wm * samples);
    Eigen::VectorXd dev = (w.array() / wm) * (fv.array() - value);
    std::span<const double> ds(dev.data(), static_cast<std::size_t>(dev.size()));
    return {value, samples > 1 ? std_error(ds) : 0.0};
}

double bmo_kappa(double p) {
    if (!(p > 1.0)) throw Error(ErrorCode::parameter_out_of_range, "kappa is defined on (1, inf)");
    return std::sqrt(1.0 + std::log((2.0 * p - 1.0) / (2.0 * (p - 1.0))) / (p * p)) - 1.0;
}

BmoConstants bmo_constants(double p, double a) {
    if (!(p > 1.0) || !(a >= 0.0))
        throw Error(ErrorCode::parameter_out_of_range, "need p > 1 and a >= 0");
    BmoConstants c;
    c.p = p;
    c.a = a;
    c.kappa = bmo_kappa(p);
    double bracket = 1.0 - (2.0 * (p - 1.0) / (2.0 * p - 1.0)) * std::exp(p * p * (a * a + 2.0 * a));
    c.K_valid = bracket > 0.0;
    c.K = c.K_valid ? 2.0 / bracket : std::numeric_limits<double>::infinity();
    if (a > 0.0) {
        // kappa decreases from +inf to 0, so kappa(p_bar) = a has a unique root
        double lo = 1.0 + 1e-12, hi = 2.0;
        while (bmo_kappa(hi) > a) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            (bmo_kappa(mid) > a ? lo : hi) = mid;
        }
        c.p_bar = 0.5 * (lo + hi);
    } else {
        c.p_bar = std::numeric_limits<double>::infinity();
    }
    return c;
}

double bmo_max_valid_p(double a) {
    if (!(a >= 0.0)) throw Error(ErrorCode::parameter_out_of_range, "need a >= 0");
    auto bracket = [a](double p) {
        return std::log(2.0 * (p - 1.0) / (2.0 * p - 1.0)) + p * p * (a * a + 2.0 * a);
    };
    // bracket is increasing with limit -> -inf as p -> 1+
    double hi = 2.0;
    while (bracket(hi) < 0.0) hi *= 2.0;
    double lo = 1.0 + std::numeric_limits<double>::epsilon();
    if (bracket(lo) >= 0.0) return lo;
    for (int it = 0; it < 200; ++it) {
        double mid = lo + 0.5 * (hi - lo);
        (bracket(mid) < 0.0 ? lo : hi) = mid;
    }
    return lo;
}

BmoCheckReport bmo_bound_check(const BsdeSolution& solution, const BoundsLedger& ledger) {
    BmoCheckReport rep;
    double a = std::abs(solution.alpha);
    if (a == 0.0) {
        // zero driver: zeta vanishes in the limit equation, bound trivially holds
        rep.bound = std::numeric_limits<double>::infinity();
        rep.passed = true;
        return rep;
    }
    rep.bound = 2.0 / (a * a) * std::exp(a * (ledger.b_F + ledger.bound()));
    int n_steps = static_cast<int>(solution.tail_qv_se.size());
    rep.max_estimate.resize(static_cast<std::size_t>(n_steps));
    rep.std_err = solution.tail_qv_se;
    rep.worst_margin = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_steps; ++i) {
        double m = solution.tail_qv_fit.col(i).maxCoeff();
        rep.max_estimate[static_cast<std::size_t>(i)] = m;
        double sigma = std::max(solution.tail_qv_se[static_cast<std::size_t>(i)], 1e-300);
        rep.worst_margin = std::max(rep.worst_margin, (m - rep.bound) / sigma);
        if (m > rep.bound + 3.0 * sigma) rep.passed = false;
    }
    return rep;
}

SweepTable epsilon_sweep(const SpectralBasis& basis, const Mollifier& mollifier,
                         const ScalarField& rho, const ScalarField& psi, double alpha, double beta,
                         const std::vector<double>& eps_list, int nx, int ny, int samples,
                         std::uint64_t seed) {
    if (eps_list.size() < 2)
        throw Error(ErrorCode::invalid_argument, "epsilon sweep needs at least two scales");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw Error(ErrorCode::invalid_argument, "epsilon list must be strictly decreasing");

    SweepTable table;
    table.f_names = {"cos_field_probe", "tanh_mode_1", "scaled_sine"};
    double prev_y0 = 0.0;
    std::vector<double> diffs;
    for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
        double eps = eps_list[ei];
        auto cache = std::make_shared<MollifiedEigenCache>(basis, mollifier, eps, nx, ny);
        auto wf = std::make_shared<WickFunctional>(*cache, rho, psi, beta);
        WickCosineTerminal terminal(wf);
        // probe for the field functional: the grid node closest to the domain center
        Point center{0.5 * basis.domain().width(), 0.5 * basis.domain().height()};
        if (basis.domain().kind() == DomainKind::unit_disk) center = {0.0, 0.0};
        int gc = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int g = 0; g < cache->n_points(); ++g) {
            double d = dist(cache->points()[static_cast<std::size_t>(g)], center);
            if (d < best) {
                best = d;
                gc = g;
            }
        }
        std::vector<std::shared_ptr<TerminalFunctional>> fs = {
            f_cos_field_at(cache, cache->points()[static_cast<std::size_t>(gc)]),
            f_tanh_mode(1, cache->n_modes()), f_scaled_sine(wf)};

        // coupled across eps: identical streams feed every scale
        Eigen::VectorXd t = terminal_samples(terminal, samples, seed, 0);
        Estimate y0 = cole_hopf_from_values(t, alpha);
        TiltWeight tilt = tilt_weights(terminal, alpha, samples, seed, 0);

        SweepRow row;
        row.eps = eps;
        row.y0 = y0.value;
        row.y0_std_err = y0.std_err;
        row.diff_prev = ei == 0 ? 0.0 : std::abs(y0.value - prev_y0);
        row.gamma_split_mean = tilt.split_mean;
        row.gamma_split_std_err = tilt.split_std_err;
        for (const auto& f : fs)
            row.f_expectations.push_back(sg_expectation(*f, terminal, alpha, samples, seed, 0));
        if (ei > 0) diffs.push_back(row.diff_prev);
        prev_y0 = y0.value;
        table.rows.push_back(std::move(row));
    }
    for (std::size_t i = 1; i < diffs.size(); ++i)
        if (!(diffs[i] < diffs[i - 1])) table.cauchy_decreasing = false;
    return table;
}

} // namespace sgl
