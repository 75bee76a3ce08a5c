#include "spectral.hpp"

#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sgl {

const EigenMode& SpectralBasis::mode(int k) const {
    if (k < 1 || k > size())
        throw Error(ErrorCode::index_out_of_range, "mode index " + std::to_string(k) +
                                                       " outside [1, " + std::to_string(size()) + "]");
    return modes_[static_cast<std::size_t>(k - 1)];
}

double SpectralBasis::eigenfunction(int k, Point p) const {
    const EigenMode& em = mode(k);
    switch (domain_.kind()) {
        case DomainKind::rectangle:
            return em.norm * std::sin(em.m * M_PI * p.x / domain_.width()) *
                   std::sin(em.n * M_PI * p.y / domain_.height());
        case DomainKind::unit_disk: {
            double r = std::hypot(p.x, p.y);
            double theta = std::atan2(p.y, p.x);
            double radial = gsl_sf_bessel_Jn(em.m, std::sqrt(em.helmholtz) * r);
            double angular = (em.parity == 0) ? std::cos(em.m * theta) : std::sin(em.m * theta);
            return em.norm * radial * angular;
        }
        case DomainKind::conformal:
            throw Error(ErrorCode::unsupported_domain, "conformal domains have no spectral basis");
    }
    return 0.0;
}

double SpectralBasis::weyl_ratio(int k) const { return lambda(k) * static_cast<double>(k); }

void SpectralBasis::export_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot open " + path);
    out << "# eigenpairs of the inverse Dirichlet Laplacian, sorted by decreasing lambda\n";
    out << "# k: 1-based index; lambda_k: eigenvalue; weyl: lambda_k*k\n";
    out << "k,lambda,weyl\n";
    char buf[128];
    for (int k = 1; k <= size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", k, lambda(k), weyl_ratio(k));
        out << buf;
    }
}

namespace {

std::vector<EigenMode> rectangle_modes(const DomainSpec& d, int n_modes) {
    double w = d.width(), h = d.height();
    // enough (m,n) pairs to cover n_modes eigenvalues with a safety margin
    double mu_cap = 4.0 * M_PI * (n_modes + 64) / d.area() * 1.6 + 64.0;
    int m_max = static_cast<int>(std::ceil(w * std::sqrt(mu_cap) / M_PI)) + 1;
    int n_max = static_cast<int>(std::ceil(h * std::sqrt(mu_cap) / M_PI)) + 1;
    double norm = 2.0 / std::sqrt(w * h);
    std::vector<EigenMode> modes;
    for (int m = 1; m <= m_max; ++m) {
        for (int n = 1; n <= n_max; ++n) {
            double mu = M_PI * M_PI * (m * m / (w * w) + n * n / (h * h));
            if (mu > mu_cap) continue;
            EigenMode em;
            em.helmholtz = mu;
            em.lambda = 1.0 / mu;
            em.m = m;
            em.n = n;
            em.norm = norm;
            em.grad_bound = norm * M_PI * std::hypot(m / w, n / h);
            modes.push_back(em);
        }
    }
    return modes;
}

std::vector<EigenMode> disk_modes(int n_modes) {
    // count(mu <= T) ~ T/4 for the unit disk, with margin
    double mu_cap = 4.0 * (n_modes + 64) * 1.5 + 64.0;
    double j_cap = std::sqrt(mu_cap);
    std::vector<EigenMode> modes;
    for (int m = 0;; ++m) {
        double j1 = gsl_sf_bessel_zero_Jnu(m, 1);
        if (j1 > j_cap) break;
        for (unsigned s = 1;; ++s) {
            double j = gsl_sf_bessel_zero_Jnu(m, s);
            if (j > j_cap) break;
            double mu = j * j;
            // L^2 normalization over the disk: int_0^1 J_m(j r)^2 r dr = J_{m+1}(j)^2 / 2
            double tail = std::abs(gsl_sf_bessel_Jn(m + 1, j));
            int copies = (m == 0) ? 1 : 2;
            double norm = (m == 0) ? 1.0 / (std::sqrt(M_PI) * tail)
                                   : std::sqrt(2.0 / M_PI) / tail;
            for (int parity = 0; parity < copies; ++parity) {
                EigenMode em;
                em.helmholtz = mu;
                em.lambda = 1.0 / mu;
                em.m = m;
                em.n = static_cast<int>(s);
                em.parity = parity;
                em.norm = norm;
                em.grad_bound = norm * j * M_SQRT2;
                modes.push_back(em);
            }
        }
    }
    return modes;
}

} // namespace

SpectralBasis build_basis(const DomainSpec& domain, int n_modes) {
    if (n_modes < 1) throw Error(ErrorCode::invalid_truncation, "basis truncation must be >= 1");
    std::vector<EigenMode> modes;
    switch (domain.kind()) {
        case DomainKind::rectangle:
            modes = rectangle_modes(domain, n_modes);
            break;
        case DomainKind::unit_disk:
            modes = disk_modes(n_modes);
            break;
        case DomainKind::conformal:
            throw Error(ErrorCode::unsupported_domain,
                        "conformal domains support Green evaluation only, not a spectral basis");
    }
    std::sort(modes.begin(), modes.end(), [](const EigenMode& a, const EigenMode& b) {
        if (a.helmholtz != b.helmholtz) return a.helmholtz < b.helmholtz;
        if (a.m != b.m) return a.m < b.m;
        if (a.n != b.n) return a.n < b.n;
        return a.parity < b.parity;
    });
    if (static_cast<int>(modes.size()) < n_modes)
        throw Error(ErrorCode::invalid_truncation, "mode enumeration cap too small");
    modes.resize(static_cast<std::size_t>(n_modes));
    return SpectralBasis(domain, std::move(modes));
}

double green_halfplane(std::complex<double> w, std::complex<double> z) {
    if (!(w.imag() > 0.0) || !(z.imag() > 0.0))
        throw Error(ErrorCode::outside_domain, "green_halfplane requires points with positive imaginary part");
    if (std::abs(w - z) < 1e-14)
        throw Error(ErrorCode::coincident_points, "green_halfplane at coincident points");
    return std::log(std::abs((w - std::conj(z)) / (w - z)));
}

double green_series(const SpectralBasis& basis, Point x, Point y) {
    if (dist(x, y) < 1e-12)
        throw Error(ErrorCode::coincident_points, "green series diverges on the diagonal");
    double acc = 0.0;
    for (int k = 1; k <= basis.size(); ++k)
        acc += basis.lambda(k) * basis.eigenfunction(k, x) * basis.eigenfunction(k, y);
    return 2.0 * M_PI * acc;
}

double green(const DomainSpec& domain, const SpectralBasis* basis, Point x, Point y,
             GreenRoute route) {
    if (!domain.contains(x) || !domain.contains(y)) return 0.0;
    if (dist(x, y) < 1e-12)
        throw Error(ErrorCode::coincident_points, "green at coincident points");
    if (route == GreenRoute::automatic)
        route = domain.has_conformal_map() ? GreenRoute::conformal : GreenRoute::series;
    if (route == GreenRoute::conformal) {
        const ConformalMap& map = domain.conformal_map();
        return green_halfplane(map.forward(x), map.forward(y));
    }
    if (basis == nullptr)
        throw Error(ErrorCode::missing_basis, "series Green evaluation needs a spectral basis");
    return green_series(*basis, x, y);
}

double mollified_green(const DomainSpec& domain, const SpectralBasis* basis,
                       const Mollifier& mollifier, double eps, double eps2, Point x, Point y,
                       int n_radial, int n_angular) {
    if (!(eps > 0.0 && eps <= 1.0 && eps2 > 0.0 && eps2 <= 1.0))
        throw Error(ErrorCode::parameter_out_of_range, "mollification scales must lie in (0,1]");
    if (!domain.in_shrunken(x, eps) || !domain.in_shrunken(y, eps2))
        throw Error(ErrorCode::outside_shrunken_domain,
                    "mollified Green needs x in Lambda_eps and y in Lambda_eps2");
    BallRule rule = mollifier.weighted_ball_rule(n_radial, n_angular);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        Point xi{x.x - eps * rule.nodes[i].x, x.y - eps * rule.nodes[i].y};
        double row = 0.0;
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            Point yj{y.x - eps2 * rule.nodes[j].x, y.y - eps2 * rule.nodes[j].y};
            if (dist(xi, yj) < 1e-12) continue; // measure-zero diagonal node collision
            row += rule.weights[j] * green(domain, basis, xi, yj);
        }
        acc += rule.weights[i] * row;
    }
    return acc;
}

double mollified_green_spectral(const SpectralBasis& basis, const Mollifier& mollifier,
                                double eps, double eps2, Point x, Point y) {
    double acc = 0.0;
    for (int k = 1; k <= basis.size(); ++k) {
        const EigenMode& em = basis.mode(k);
        double s = std::sqrt(em.helmholtz);
        acc += em.lambda * mollifier.hat(eps * s) * mollifier.hat(eps2 * s) *
               basis.eigenfunction(k, x) * basis.eigenfunction(k, y);
    }
    return 2.0 * M_PI * acc;
}

} // namespace sgl
