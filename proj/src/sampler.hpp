#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "spectral.hpp"

namespace sgl {

// KL coordinates of one field sample: the time-1 values of the independent
// Brownian modes, i.i.d. standard normal. Reproducible from (seed, stream).
struct ModeCoefficients {
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    int size() const { return static_cast<int>(values.size()); }
};

ModeCoefficients sample_modes(int n_modes, std::uint64_t seed, std::uint64_t stream = 0);

// Columns are independent samples; column j uses stream `first_stream + j`,
// so the matrix is identical however the columns are filled.
Eigen::MatrixXd sample_mode_matrix(int n_modes, int n_samples, std::uint64_t seed,
                                   std::uint64_t first_stream = 0);

// W_1(x) = sum_k sqrt(2 pi lambda_k) xi_k e_k(x)
double field_value(const SpectralBasis& basis, const ModeCoefficients& modes, Point x);

// Mollified eigenfunctions tabulated on a tensor grid restricted to
// Lambda_eps. Because eigenfunctions solve the Helmholtz equation globally,
// (e_k * eta_eps)(x) = hat(eps sqrt(mu_k)) e_k(x) exactly, so the table holds
// factor_k * e_k(x); the variance table is the matched-truncation G^{eps,N}.
class MollifiedEigenCache {
public:
    MollifiedEigenCache(const SpectralBasis& basis, const Mollifier& mollifier, double eps,
                        int nx, int ny);

    double eps() const { return eps_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int n_points() const { return static_cast<int>(points_.size()); }
    int n_modes() const { return static_cast<int>(factors_.size()); }

    const std::vector<Point>& points() const { return points_; }
    double weight(int /*g*/) const { return cell_weight_; } // uniform midpoint cells
    double variance(int g) const { return variance_[static_cast<std::size_t>(g)]; }
    const std::vector<double>& variances() const { return variance_; }
    double factor(int k) const { return factors_[static_cast<std::size_t>(k - 1)]; } // 1-based
    double lambda(int k) const { return lambdas_[static_cast<std::size_t>(k - 1)]; }

    // table of (e_k * eta_eps)(x_g); rows are grid points, columns modes
    const Eigen::MatrixXd& table() const { return table_; }

    // sup-norm bound on the gradient of the sampled mollified field
    double gradient_bound(const ModeCoefficients& modes) const;

    // grid lookup; throws PointNotCached when p is not a cached node
    int index_of(Point p) const;

    // flat tensor-grid coordinate ix*ny + iy of a cached node
    int grid_flat(int g) const { return grid_index_[static_cast<std::size_t>(g)]; }

    // mollified field at one cached node
    double field_at(const ModeCoefficients& modes, int g) const;

    // mollified field on the whole grid for a batch of samples:
    // result is n_points x n_samples
    Eigen::MatrixXd field_on_grid(const Eigen::MatrixXd& mode_matrix) const;

    void export_csv(const std::string& path) const;
    static MollifiedEigenCache import_csv(const std::string& path);

private:
    MollifiedEigenCache() = default;

    double eps_ = 0.0;
    int nx_ = 0, ny_ = 0;
    double cell_weight_ = 0.0;
    std::vector<Point> points_;
    std::vector<int> grid_index_; // ix*ny + iy for each cached node
    std::vector<double> variance_;
    std::vector<double> factors_;
    std::vector<double> lambdas_;
    std::vector<double> grad_bounds_;
    Eigen::MatrixXd table_;      // n_points x n_modes
    Eigen::VectorXd kl_scale_;   // sqrt(2 pi lambda_k)
    double hx_ = 0.0, hy_ = 0.0, x0_ = 0.0, y0_ = 0.0;
};

// Conditional decomposition B_1 = sqrt(t) xi + sqrt(1-t) zeta given F_t.
struct BridgeSplit {
    std::vector<double> mean;      // sqrt(t) xi, the conditional mean of B_1
    ModeCoefficients fresh;        // independent standard normal part
};

BridgeSplit bridge_split(const ModeCoefficients& modes_at_1, double t, std::uint64_t seed,
                         std::uint64_t stream = 0);

} // namespace sgl
