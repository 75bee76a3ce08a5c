#include "coulomb.hpp"

#include <gsl/gsl_qrng.h>

#include <cmath>
#include <mutex>

namespace sgl {

double interaction_energy(const ChargeConfiguration& config,
                          const std::function<double(Point, Point)>& green_fn) {
    int n = config.n();
    if (static_cast<int>(config.signs.size()) != n)
        throw Error(ErrorCode::invalid_argument, "one sign per charge position");
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        for (int l = k + 1; l < n; ++l) {
            if (dist(config.positions[static_cast<std::size_t>(k)],
                     config.positions[static_cast<std::size_t>(l)]) < 1e-12)
                throw Error(ErrorCode::coincident_points, "charge positions must be distinct");
            acc += config.signs[static_cast<std::size_t>(k)] * config.signs[static_cast<std::size_t>(l)] *
                   green_fn(config.positions[static_cast<std::size_t>(k)],
                            config.positions[static_cast<std::size_t>(l)]);
        }
    }
    return acc;
}

namespace {

// sign vectors with the first charge fixed positive; global conjugation
// doubles every term
std::vector<std::vector<int>> half_sign_vectors(int n) {
    std::vector<std::vector<int>> out;
    int reps = 1 << (n - 1);
    for (int mask = 0; mask < reps; ++mask) {
        std::vector<int> gamma(static_cast<std::size_t>(n), 1);
        for (int k = 1; k < n; ++k)
            if (mask & (1 << (k - 1))) gamma[static_cast<std::size_t>(k)] = -1;
        out.push_back(std::move(gamma));
    }
    return out;
}

struct CoarseNodes {
    std::vector<int> active; // indices into the functional's active set
    double weight_scale = 1.0;
};

// decimate the active tensor nodes by `stride` in both grid directions
CoarseNodes coarse_subset(const WickFunctional& w, int stride) {
    CoarseNodes c;
    if (stride < 1) stride = 1;
    const MollifiedEigenCache& cache = w.cache();
    int ny = cache.ny();
    for (int a = 0; a < w.n_active(); ++a) {
        int flat = cache.grid_flat(w.active_nodes()[static_cast<std::size_t>(a)]);
        int ix = flat / ny, iy = flat % ny;
        if (ix % stride == 0 && iy % stride == 0) c.active.push_back(a);
    }
    c.weight_scale = static_cast<double>(stride) * stride;
    if (c.active.empty())
        throw Error(ErrorCode::grid_coverage, "coarse decimation removed every node; lower the stride");
    return c;
}

// e^{-beta^2 sum_{k<l} gamma_k gamma_l G_kl} summed over half the sign
// vectors, doubled
double sign_sum(const std::vector<std::vector<int>>& gammas, const Eigen::MatrixXd& g,
                double beta2) {
    int n = static_cast<int>(g.rows());
    double acc = 0.0;
    for (const auto& gamma : gammas) {
        double e = 0.0;
        for (int k = 0; k < n; ++k)
            for (int l = k + 1; l < n; ++l) e += gamma[static_cast<std::size_t>(k)] * gamma[static_cast<std::size_t>(l)] * g(k, l);
        acc += std::exp(-beta2 * e);
    }
    return 2.0 * acc;
}

} // namespace

double q_n_quadrature(const SpectralBasis& basis, const WickFunctional& w, int n,
                      const QuadSpec& spec) {
    if (n < 0) throw Error(ErrorCode::invalid_argument, "configuration size must be nonnegative");
    if (n == 0) return 1.0;
    double beta2 = w.beta() * w.beta();
    const Eigen::VectorXd& c = w.node_weight();

    if (n == 1) return 2.0 * c.sum();

    // no interaction at beta = 0: the sign sum is 2^n and the integral factorizes
    if (beta2 == 0.0) return std::pow(2.0 * c.sum(), n);

    if (n == 2) {
        Eigen::MatrixXd gram = w.mode_table() * w.mode_table().transpose();
        double acc = 0.0;
        for (Eigen::Index a = 0; a < c.size(); ++a) {
            double row = 0.0;
            for (Eigen::Index b = 0; b < c.size(); ++b)
                row += c(b) * (std::exp(-beta2 * gram(a, b)) + std::exp(beta2 * gram(a, b)));
            acc += c(a) * row;
        }
        return 2.0 * acc;
    }

    if (n <= spec.tensor_max_n) {
        CoarseNodes coarse = coarse_subset(w, spec.coarse_stride);
        int m = static_cast<int>(coarse.active.size());
        Eigen::MatrixXd rows(m, w.mode_table().cols());
        Eigen::VectorXd cw(m);
        for (int i = 0; i < m; ++i) {
            rows.row(i) = w.mode_table().row(coarse.active[static_cast<std::size_t>(i)]);
            cw(i) = c(coarse.active[static_cast<std::size_t>(i)]) * coarse.weight_scale;
        }
        Eigen::MatrixXd gram = rows * rows.transpose();
        auto gammas = half_sign_vectors(n);
        // n = 3 tensor sum over the decimated grid
        double acc = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : acc)
        for (int a = 0; a < m; ++a) {
            double slab = 0.0;
            Eigen::MatrixXd g(3, 3);
            for (int b = 0; b < m; ++b) {
                for (int d = 0; d < m; ++d) {
                    g(0, 1) = gram(a, b);
                    g(0, 2) = gram(a, d);
                    g(1, 2) = gram(b, d);
                    slab += cw(b) * cw(d) * sign_sum(gammas, g, beta2);
                }
            }
            acc += cw(a) * slab;
        }
        return acc;
    }

    if (n > spec.qmc_max_n)
        throw Error(ErrorCode::dimension_too_large,
                    "configuration quadrature supports n <= " + std::to_string(spec.qmc_max_n));

    // Sobol integration over the bounding box of the active nodes
    const MollifiedEigenCache& cache = w.cache();
    double lox = 1e300, loy = 1e300, hix = -1e300, hiy = -1e300;
    for (int a = 0; a < w.n_active(); ++a) {
        Point p = cache.points()[static_cast<std::size_t>(w.active_nodes()[static_cast<std::size_t>(a)])];
        lox = std::min(lox, p.x);
        hix = std::max(hix, p.x);
        loy = std::min(loy, p.y);
        hiy = std::max(hiy, p.y);
    }
    double pad = 0.5 * std::hypot((hix - lox) / cache.nx(), (hiy - loy) / cache.ny());
    lox -= pad;
    loy -= pad;
    hix += pad;
    hiy += pad;
    double vol = (hix - lox) * (hiy - loy);

    int n_modes = cache.n_modes();
    Eigen::VectorXd scale(n_modes);
    for (int k = 1; k <= n_modes; ++k)
        scale(k - 1) = std::sqrt(2.0 * M_PI * cache.lambda(k)) * cache.factor(k);

    auto gammas = half_sign_vectors(n);
    gsl_qrng* qrng = gsl_qrng_alloc(gsl_qrng_sobol, static_cast<unsigned>(2 * n));
    std::vector<double> u(static_cast<std::size_t>(2 * n));
    Eigen::MatrixXd modes(n_modes, n);
    Eigen::MatrixXd g(n, n);
    double acc = 0.0;
    const DomainSpec& dom = basis.domain();
    for (int it = 0; it < spec.qmc_points; ++it) {
        gsl_qrng_get(qrng, u.data());
        double weight = 1.0;
        bool alive = true;
        std::vector<Point> pts(static_cast<std::size_t>(n));
        for (int k = 0; k < n && alive; ++k) {
            Point p{lox + u[static_cast<std::size_t>(2 * k)] * (hix - lox),
                    loy + u[static_cast<std::size_t>(2 * k + 1)] * (hiy - loy)};
            pts[static_cast<std::size_t>(k)] = p;
            if (!dom.in_shrunken(p, cache.eps())) {
                alive = false;
                break;
            }
            double rv = w.rho().eval(p) * w.psi().eval(p);
            if (rv == 0.0) {
                alive = false;
                break;
            }
            weight *= rv;
        }
        if (!alive) continue;
        for (int k = 0; k < n; ++k)
            for (int j = 1; j <= n_modes; ++j)
                modes(j - 1, k) = scale(j - 1) * basis.eigenfunction(j, pts[static_cast<std::size_t>(k)]);
        for (int k = 0; k < n; ++k)
            for (int l = k + 1; l < n; ++l) g(k, l) = modes.col(k).dot(modes.col(l));
        acc += weight * sign_sum(gammas, g, beta2);
    }
    gsl_qrng_free(qrng);
    return acc / spec.qmc_points * std::pow(vol, n);
}

Estimate q_n_moment(const WickFunctional& w, int n, int samples, std::uint64_t seed,
                    std::uint64_t first_stream) {
    if (n < 0) throw Error(ErrorCode::invalid_argument, "moment order must be nonnegative");
    if (n == 0) return {1.0, 0.0};
    auto holder = std::shared_ptr<const WickFunctional>(std::shared_ptr<const WickFunctional>(), &w);
    WickCosineTerminal terminal(holder);
    Eigen::VectorXd t = terminal_samples(terminal, samples, seed, first_stream);
    Eigen::VectorXd powed = (2.0 * t.array()).pow(n);
    std::span<const double> ps(powed.data(), static_cast<std::size_t>(powed.size()));
    return {mean(ps), std_error(ps)};
}

PartitionReport partition(const SpectralBasis& basis, const WickFunctional& w, double alpha,
                          int n_max, int samples, std::uint64_t seed, const QuadSpec& spec) {
    if (n_max < 0 || n_max > spec.qmc_max_n)
        throw Error(ErrorCode::dimension_too_large, "series truncation outside the quadrature range");
    PartitionReport rep;
    rep.alpha = alpha;
    rep.beta = w.beta();
    rep.eps = w.cache().eps();
    rep.n_max = n_max;
    rep.uniform_bound = w.ledger().bound();

    auto holder = std::shared_ptr<const WickFunctional>(std::shared_ptr<const WickFunctional>(), &w);
    WickCosineTerminal terminal(holder);
    Eigen::VectorXd t = terminal_samples(terminal, samples, seed, 0);

    double fact = 1.0, apow = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) {
            fact *= n;
            apow *= alpha / 2.0;
        }
        rep.q_terms.push_back(q_n_quadrature(basis, w, n, spec));
        Eigen::VectorXd powed = (2.0 * t.array()).pow(n);
        std::span<const double> ps(powed.data(), static_cast<std::size_t>(powed.size()));
        rep.q_moments.push_back({mean(ps), n == 0 ? 0.0 : std_error(ps)});
        rep.series_sum += apow / fact * rep.q_terms.back();
    }

    // remainder under the uniform bound |2 xi| <= 2 b_rho b_psi C_beta
    double ab = std::abs(alpha) * rep.uniform_bound;
    double partial = 0.0, term = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        partial += term;
        term *= ab / (n + 1);
    }
    rep.tail_bound = std::exp(ab) - partial;

    Eigen::VectorXd e = (alpha * t.array()).exp();
    std::span<const double> es(e.data(), static_cast<std::size_t>(e.size()));
    rep.mc_partition = {mean(es), std_error(es)};
    Estimate y0 = cole_hopf_from_values(t, alpha);
    rep.y0 = y0.value;
    rep.y0_link = alpha == 0.0 ? 1.0 : std::exp(alpha * rep.y0);

    int m = n_max + 1;
    rep.onsager_exponent = 0.25 * rep.beta * rep.beta * m * std::log(static_cast<double>(m)) -
                           std::lgamma(m + 1.0) + m * std::log(std::max(ab, 1e-300) / 2.0);
    return rep;
}

double ising_npoint_halfplane(const std::vector<std::complex<double>>& points) {
    int n = static_cast<int>(points.size());
    if (n < 1) throw Error(ErrorCode::invalid_argument, "need at least one point");
    double prefactor = 1.0;
    for (const auto& z : points) {
        if (!(z.imag() > 0.0))
            throw Error(ErrorCode::outside_domain, "spin points must lie in the upper half-plane");
        prefactor *= std::pow(2.0 * z.imag(), -0.125);
    }
    for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l)
            if (std::abs(points[static_cast<std::size_t>(k)] - points[static_cast<std::size_t>(l)]) < 1e-14)
                throw Error(ErrorCode::coincident_points, "spin points must be distinct");

    double inner = 0.0;
    int reps = 1 << n;
    for (int mask = 0; mask < reps; ++mask) {
        double prod = 1.0;
        for (int k = 0; k < n; ++k) {
            for (int l = k + 1; l < n; ++l) {
                int gk = (mask & (1 << k)) ? -1 : 1;
                int gl = (mask & (1 << l)) ? -1 : 1;
                double ratio = std::abs(points[static_cast<std::size_t>(k)] - points[static_cast<std::size_t>(l)]) /
                               std::abs(points[static_cast<std::size_t>(k)] - std::conj(points[static_cast<std::size_t>(l)]));
                prod *= std::pow(ratio, 0.5 * gk * gl);
            }
        }
        inner += prod;
    }
    return prefactor * std::sqrt(std::pow(2.0, -0.5 * n) * inner);
}

double zeta_prime_minus1() {
    static std::once_flag flag;
    static double value = 0.0;
    std::call_once(flag, [] {
        // Glaisher-Kinkelin via hyperfactorial asymptotics with Euler-Maclaurin
        // corrections: sum_{k<=n} k log k = (n^2/2 + n/2 + 1/12) log n - n^2/4
        // + log A + 1/(720 n^2) - 1/(5040 n^4) + O(n^-6). A modest n keeps the
        // cancellation in the subtraction far above double rounding.
        const long n = 200;
        double s = 0.0, comp = 0.0;
        for (long k = 1; k <= n; ++k) {
            double term = static_cast<double>(k) * std::log(static_cast<double>(k)) - comp;
            double t = s + term;
            comp = (t - s) - term;
            s = t;
        }
        double nn = static_cast<double>(n);
        double log_glaisher = s - (nn * nn / 2.0 + nn / 2.0 + 1.0 / 12.0) * std::log(nn) +
                              nn * nn / 4.0 - 1.0 / (720.0 * nn * nn) + 1.0 / (5040.0 * nn * nn * nn * nn);
        value = 1.0 / 12.0 - log_glaisher;
    });
    return value;
}

double ising_lattice_constant() {
    return std::pow(2.0, 5.0 / 48.0) * std::exp(1.5 * zeta_prime_minus1());
}

XorReport xor_identity_check(const DomainSpec& domain, const ScalarField& rho, int n, int nx,
                             int ny, const QuadSpec& spec) {
    if (n < 1 || n > spec.tensor_max_n)
        throw Error(ErrorCode::dimension_too_large, "the identity check covers n <= 3");
    const ConformalMap& map = domain.conformal_map();
    double c_const = ising_lattice_constant();

    // tensor grid over the domain bounding box
    double bx0 = 0.0, by0 = 0.0, bx1 = domain.width(), by1 = domain.height();
    if (domain.kind() == DomainKind::unit_disk) {
        bx0 = by0 = -1.0;
        bx1 = by1 = 1.0;
    }
    double hx = (bx1 - bx0) / nx, hy = (by1 - by0) / ny;

    std::vector<std::complex<double>> phi;
    std::vector<double> wrho, wrho_psi, dphi8; // |phi'|^{1/8}
    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) {
            Point p{bx0 + (ix + 0.5) * hx, by0 + (iy + 0.5) * hy};
            if (!domain.contains(p)) continue;
            double r = rho.eval(p);
            if (r == 0.0) continue;
            std::complex<double> z = map.forward(p);
            double dabs = std::abs(map.derivative(p));
            double psi_w = std::pow(dabs / (2.0 * z.imag()), 0.25);
            phi.push_back(z);
            wrho.push_back(hx * hy * r);
            wrho_psi.push_back(hx * hy * r * psi_w);
            dphi8.push_back(std::pow(dabs, 0.125));
        }
    }
    int m = static_cast<int>(phi.size());
    if (m == 0) throw Error(ErrorCode::grid_coverage, "test function support misses the grid");

    XorReport rep;
    rep.n = n;
    double series_pref = std::pow(c_const * c_const / M_SQRT2, n);
    auto gammas = half_sign_vectors(n);

    if (n == 1) {
        double a = 0.0, b = 0.0;
        for (int i = 0; i < m; ++i) {
            a += wrho_psi[static_cast<std::size_t>(i)];
            double corr = c_const * ising_npoint_halfplane({phi[static_cast<std::size_t>(i)]}) *
                          dphi8[static_cast<std::size_t>(i)];
            b += wrho[static_cast<std::size_t>(i)] * corr * corr;
        }
        rep.series_route = series_pref * 2.0 * a;
        rep.correlation_route = b;
    } else if (n == 2) {
        double a = 0.0, b = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : a, b)
        for (int i = 0; i < m; ++i) {
            Eigen::MatrixXd g(2, 2);
            for (int j = 0; j < m; ++j) {
                if (i == j) continue; // the exact Green kernel is singular on the diagonal
                g(0, 1) = green_halfplane(phi[static_cast<std::size_t>(i)], phi[static_cast<std::size_t>(j)]);
                a += wrho_psi[static_cast<std::size_t>(i)] * wrho_psi[static_cast<std::size_t>(j)] *
                     sign_sum(gammas, g, 0.5);
                double corr = c_const * c_const *
                              ising_npoint_halfplane({phi[static_cast<std::size_t>(i)], phi[static_cast<std::size_t>(j)]}) *
                              dphi8[static_cast<std::size_t>(i)] * dphi8[static_cast<std::size_t>(j)];
                b += wrho[static_cast<std::size_t>(i)] * wrho[static_cast<std::size_t>(j)] * corr * corr;
            }
        }
        rep.series_route = series_pref * a;
        rep.correlation_route = b;
    } else {
        // n = 3 on a decimated grid
        std::vector<int> sel;
        for (int i = 0; i < m; i += spec.coarse_stride) sel.push_back(i);
        double scale = static_cast<double>(spec.coarse_stride);
        double a = 0.0, b = 0.0;
        for (int ii : sel) {
            for (int jj : sel) {
                for (int kk : sel) {
                    if (ii == jj || jj == kk || ii == kk) continue;
                    Eigen::MatrixXd g(3, 3);
                    g(0, 1) = green_halfplane(phi[static_cast<std::size_t>(ii)], phi[static_cast<std::size_t>(jj)]);
                    g(0, 2) = green_halfplane(phi[static_cast<std::size_t>(ii)], phi[static_cast<std::size_t>(kk)]);
                    g(1, 2) = green_halfplane(phi[static_cast<std::size_t>(jj)], phi[static_cast<std::size_t>(kk)]);
                    a += wrho_psi[static_cast<std::size_t>(ii)] * wrho_psi[static_cast<std::size_t>(jj)] *
                         wrho_psi[static_cast<std::size_t>(kk)] * sign_sum(gammas, g, 0.5);
                    double corr = std::pow(c_const, 3) *
                                  ising_npoint_halfplane({phi[static_cast<std::size_t>(ii)],
                                                          phi[static_cast<std::size_t>(jj)],
                                                          phi[static_cast<std::size_t>(kk)]}) *
                                  dphi8[static_cast<std::size_t>(ii)] * dphi8[static_cast<std::size_t>(jj)] *
                                  dphi8[static_cast<std::size_t>(kk)];
                    b += wrho[static_cast<std::size_t>(ii)] * wrho[static_cast<std::size_t>(jj)] *
                         wrho[static_cast<std::size_t>(kk)] * corr * corr;
                }
            }
        }
        rep.series_route = series_pref * a * scale * scale * scale;
        rep.correlation_route = b * scale * scale * scale;
    }
    rep.difference = std::abs(rep.series_route - rep.correlation_route);
    return rep;
}

CharFunctionalReport char_functional(const MollifiedEigenCache& cache, const ScalarField& rho,
                                     const ScalarField& theta, double alpha, double beta, int n_max,
                                     int samples, std::uint64_t seed, const QuadSpec& spec) {
    if (n_max < 0 || n_max > spec.tensor_max_n)
        throw Error(ErrorCode::dimension_too_large, "series truncation outside the tensor range");
    WickFunctional w(cache, rho, psi_one(), beta);
    ThetaFunctional f_theta(w, theta);

    CharFunctionalReport rep;
    rep.theta_name = theta.name;
    rep.alpha = alpha;
    rep.beta = beta;
    rep.eps = cache.eps();
    rep.n_max = n_max;

    // tilt route: self-normalized E[e^{alpha xi} e^{-2 alpha F}] / E[e^{alpha xi}]
    const int block = 8192;
    Eigen::VectorXd xi(samples), fv(samples);
    for (int j0 = 0; j0 < samples; j0 += block) {
        int bs = std::min(block, samples - j0);
        Eigen::MatrixXd modes =
            sample_mode_matrix(cache.n_modes(), bs, seed, static_cast<std::uint64_t>(j0));
        Eigen::MatrixXd field = w.field(modes);
        for (int j = 0; j < bs; ++j) {
            xi(j0 + j) = w.cos_value(field.col(j));
            fv(j0 + j) = f_theta.value(field.col(j));
        }
    }
    Eigen::VectorXd wexp = (alpha * xi.array()).exp();
    Eigen::VectorXd num = wexp.array() * (-2.0 * alpha * fv.array()).exp();
    double wm = wexp.mean();
    double value = num.mean() / wm;
    Eigen::VectorXd dev = (wexp.array() / wm) * ((-2.0 * alpha * fv.array()).exp() - value);
    std::span<const double> ds(dev.data(), static_cast<std::size_t>(dev.size()));
    rep.psi_tilt = {value, samples > 1 ? std_error(ds) : 0.0};

    // series route on the cache grid
    const Eigen::VectorXd& c = w.node_weight();
    Eigen::VectorXd th(w.n_active());
    for (int a = 0; a < w.n_active(); ++a)
        th(a) = theta.eval(cache.points()[static_cast<std::size_t>(w.active_nodes()[static_cast<std::size_t>(a)])]);
    double beta2 = beta * beta;

    std::vector<double> s_terms, q_terms;
    for (int n = 0; n <= n_max; ++n) {
        if (n == 0) {
            s_terms.push_back(1.0);
            q_terms.push_back(1.0);
        } else if (n == 1) {
            double s = 0.0;
            for (Eigen::Index a = 0; a < c.size(); ++a) s += c(a) * std::cos(th(a));
            s_terms.push_back(2.0 * s);
            q_terms.push_back(2.0 * c.sum());
        } else if (n == 2) {
            Eigen::MatrixXd gram = w.mode_table() * w.mode_table().transpose();
            double s = 0.0, q = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : s, q)
            for (Eigen::Index a = 0; a < c.size(); ++a) {
                for (Eigen::Index b = 0; b < c.size(); ++b) {
                    double em = std::exp(-beta2 * gram(a, b));
                    double ep = std::exp(beta2 * gram(a, b));
                    s += c(a) * c(b) * 2.0 *
                         (std::cos(th(a) + th(b)) * em + std::cos(th(a) - th(b)) * ep);
                    q += c(a) * c(b) * 2.0 * (em + ep);
                }
            }
            s_terms.push_back(s);
            q_terms.push_back(q);
        } else {
            CoarseNodes coarse = coarse_subset(w, spec.coarse_stride);
            int m = static_cast<int>(coarse.active.size());
            Eigen::MatrixXd rows(m, w.mode_table().cols());
            Eigen::VectorXd cw(m), tc(m);
            for (int i = 0; i < m; ++i) {
                rows.row(i) = w.mode_table().row(coarse.active[static_cast<std::size_t>(i)]);
                cw(i) = c(coarse.active[static_cast<std::size_t>(i)]) * coarse.weight_scale;
                tc(i) = th(coarse.active[static_cast<std::size_t>(i)]);
            }
            Eigen::MatrixXd gram = rows * rows.transpose();
            auto gammas = half_sign_vectors(3);
            double s = 0.0, q = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : s, q)
            for (int a = 0; a < m; ++a) {
                for (int b = 0; b < m; ++b) {
                    for (int d = 0; d < m; ++d) {
                        double cc = cw(a) * cw(b) * cw(d);
                        for (const auto& gamma : gammas) {
                            double e = gamma[0] * gamma[1] * gram(a, b) + gamma[0] * gamma[2] * gram(a, d) +
                                       gamma[1] * gamma[2] * gram(b, d);
                            double boltz = std::exp(-beta2 * e);
                            double phase = gamma[0] * tc(a) + gamma[1] * tc(b) + gamma[2] * tc(d);
                            s += cc * 2.0 * std::cos(phase) * boltz;
                            q += cc * 2.0 * boltz;
                        }
                    }
                }
            }
            s_terms.push_back(s);
            q_terms.push_back(q);
        }
    }

    double series_num = 0.0, series_den = 0.0, fact = 1.0, apow = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) {
            fact *= n;
            apow *= alpha / 2.0;
        }
        series_num += apow / fact * s_terms[static_cast<std::size_t>(n)];
        series_den += apow / fact * q_terms[static_cast<std::size_t>(n)];
    }
    double ab = std::abs(alpha) * w.ledger().bound();
    double partial = 0.0, term = 1.0;
    for (int n = 0; n <= n_max; ++n) {
        partial += term;
        term *= ab / (n + 1);
    }
    double tail = std::exp(ab) - partial;

    rep.psi_series = {series_num / series_den, 0.0};
    rep.series_tail_bound = 2.0 * tail / series_den;
    rep.agreement = std::abs(rep.psi_tilt.value - rep.psi_series.real());
    rep.combined_err = 3.0 * rep.psi_tilt.std_err + rep.series_tail_bound;
    return rep;
}

} // namespace sgl
