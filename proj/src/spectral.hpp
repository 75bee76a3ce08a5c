#pragma once

#include <optional>
#include <string>
#include <vector>

#include "domain.hpp"

namespace sgl {

// One eigenpair of the inverse Dirichlet Laplacian. `helmholtz` is the
// eigenvalue mu of -Delta (so lambda = 1/mu); eigenfunctions are L^2-normalized
// on the domain and extend to global solutions of the Helmholtz equation,
// which is what makes mollification an exact per-mode multiplier.
struct EigenMode {
    double lambda = 0.0;
    double helmholtz = 0.0;
    // rectangle: (m, n) sine indices; disk: m = angular order, n = radial index
    int m = 0;
    int n = 0;
    // disk only: cosine (0) or sine (1) angular factor; rectangle: always 0
    int parity = 0;
    double norm = 1.0;     // normalization constant of the eigenfunction
    double grad_bound = 0.0; // sup-norm bound on the gradient, used for smoothness diagnostics
};

class SpectralBasis {
public:
    SpectralBasis(DomainSpec domain, std::vector<EigenMode> modes)
        : domain_(std::move(domain)), modes_(std::move(modes)) {}

    const DomainSpec& domain() const { return domain_; }
    int size() const { return static_cast<int>(modes_.size()); }
    const EigenMode& mode(int k) const; // 1-based, matches the eigenvalue ordering
    double lambda(int k) const { return mode(k).lambda; }

    double eigenfunction(int k, Point p) const;

    // lambda_k * k, the Weyl diagnostic sequence
    double weyl_ratio(int k) const;

    void export_csv(const std::string& path) const;

private:
    DomainSpec domain_;
    std::vector<EigenMode> modes_;
};

// Analytic Dirichlet spectra; conformal domains are rejected.
SpectralBasis build_basis(const DomainSpec& domain, int n_modes);

// log |(w - conj(z)) / (w - z)| on the upper half-plane
double green_halfplane(std::complex<double> w, std::complex<double> z);

enum class GreenRoute { automatic, series, conformal };

// Dirichlet Green function scaled so that G ~ -log|x-y| near the diagonal.
// Returns 0 when either point lies outside the domain. The series route needs
// a basis; the conformal route needs the domain's half-plane map.
double green(const DomainSpec& domain, const SpectralBasis* basis, Point x, Point y,
             GreenRoute route = GreenRoute::automatic);

// Truncated-series Green value 2*pi*sum_k lambda_k e_k(x) e_k(y).
double green_series(const SpectralBasis& basis, Point x, Point y);

// Double mollification of `green` by quadrature over the two mollifier balls.
// Finite on the diagonal; requires x in Lambda_eps and y in Lambda_eps2.
double mollified_green(const DomainSpec& domain, const SpectralBasis* basis,
                       const Mollifier& mollifier, double eps, double eps2, Point x, Point y,
                       int n_radial = 16, int n_angular = 16);

// Same quantity through the per-mode multiplier: 2*pi*sum_k lambda_k
// hat(eps*sqrt(mu_k)) hat(eps2*sqrt(mu_k)) e_k(x) e_k(y). Exact for the
// truncated field, and the form every Monte Carlo identity is built on.
double mollified_green_spectral(const SpectralBasis& basis, const Mollifier& mollifier,
                                double eps, double eps2, Point x, Point y);

} // namespace sgl
