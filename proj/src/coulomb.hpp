#pragma once

#include <complex>

#include "bsde.hpp"

namespace sgl {

struct ChargeConfiguration {
    std::vector<Point> positions;
    std::vector<int> signs; // +1 / -1

    int n() const { return static_cast<int>(positions.size()); }
};

// sum_{k<l} gamma_k gamma_l G(x_k, x_l) under the supplied Green evaluator
double interaction_energy(const ChargeConfiguration& config,
                          const std::function<double(Point, Point)>& green_fn);

struct QuadSpec {
    int coarse_stride = 4;   // grid decimation for tensor sums at n = 3
    int qmc_points = 1 << 14; // Sobol budget for n >= 4
    int tensor_max_n = 3;
    int qmc_max_n = 8;
};

// Q_n by charge-configuration quadrature on the cache grid (tensor sums for
// n <= 3, Sobol integration above). The Green function of the eps-context is
// the matched-truncation mollified kernel of the functional's cache.
double q_n_quadrature(const SpectralBasis& basis, const WickFunctional& w, int n,
                      const QuadSpec& spec = {});

// Q_n as the GFF moment E[(2 xi_eps)^n]
Estimate q_n_moment(const WickFunctional& w, int n, int samples, std::uint64_t seed,
                    std::uint64_t first_stream = 0);

struct PartitionReport {
    double alpha = 0.0;
    double beta = 0.0;
    double eps = 0.0;
    int n_max = 0;
    std::vector<double> q_terms;      // quadrature route, n = 0..n_max
    std::vector<Estimate> q_moments;  // moment route
    double series_sum = 0.0;          // sum alpha^n q_terms[n] / (2^n n!)
    double tail_bound = 0.0;          // closed-form uniform-bound remainder
    Estimate mc_partition;            // E[e^{alpha xi_eps}]
    double y0 = 0.0;                  // Cole-Hopf initial value on the same draws
    double y0_link = 0.0;             // e^{alpha y0}; identical to mc_partition.value
    double onsager_exponent = 0.0;    // log of the Stirling-route summand at n_max+1
    double uniform_bound = 0.0;       // b_rho b_psi C_beta
};

PartitionReport partition(const SpectralBasis& basis, const WickFunctional& w, double alpha,
                          int n_max, int samples, std::uint64_t seed, const QuadSpec& spec = {});

// Scaling limit of the n-point spin correlation on the upper half-plane.
double ising_npoint_halfplane(const std::vector<std::complex<double>>& points);

// zeta'(-1) by the Glaisher-Kinkelin route; C = 2^{5/48} e^{3 zeta'(-1) / 2}.
double zeta_prime_minus1();
double ising_lattice_constant();

struct XorReport {
    int n = 0;
    double series_route = 0.0;      // charge-series integrand at beta = 1/sqrt(2)
    double correlation_route = 0.0; // squared-correlation integrand
    double difference = 0.0;
};

// Evaluates I_n two independent ways on a domain with a half-plane map.
XorReport xor_identity_check(const DomainSpec& domain, const ScalarField& rho, int n, int nx,
                             int ny, const QuadSpec& spec = {});

struct CharFunctionalReport {
    std::string theta_name;
    double alpha = 0.0;
    double beta = 0.0;
    double eps = 0.0;
    int n_max = 0;
    Estimate psi_tilt;                 // E[Gamma e^{-2 alpha F_rho_theta}]
    std::complex<double> psi_series;   // truncated configuration series / Xi
    double series_tail_bound = 0.0;
    double agreement = 0.0;            // |tilt - Re series|
    double combined_err = 0.0;
};

// The charge-distribution characteristic functional, tilt route vs
// configuration-series route; the density is fixed to psi = 1.
CharFunctionalReport char_functional(const MollifiedEigenCache& cache, const ScalarField& rho,
                                     const ScalarField& theta, double alpha, double beta, int n_max,
                                     int samples, std::uint64_t seed, const QuadSpec& spec = {});

} // namespace sgl
