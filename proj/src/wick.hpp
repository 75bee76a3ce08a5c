#pragma once

#include <complex>
#include <functional>
#include <string>

#include "sampler.hpp"

namespace sgl {

// A named scalar field on the domain with a declared sup-norm bound and an
// optional support predicate. Test functions, densities and phase functions
// are all of this shape; only their catalogs differ.
struct ScalarField {
    std::string name;
    std::function<double(Point)> eval;
    double bound = 1.0;
    std::function<bool(Point)> in_support; // null means everywhere

    double operator()(Point p) const { return eval(p); }
    bool supported_at(Point p) const { return !in_support || in_support(p); }
};

// --- catalogs ----------------------------------------------------------------

// smooth bump exp(1 - 1/(1 - |x-c|^2/R^2)) on |x-c| < R, peak value 1
ScalarField rho_bump(Point center, double radius);
// product-sine window squared, vanishing on the rectangle boundary
ScalarField rho_sine_window(const DomainSpec& rectangle);
// indicator of a closed disk (constant on support)
ScalarField rho_disk_indicator(Point center, double radius);
// grid table loaded from CSV rows "x,y,value"; evaluation snaps to the nearest
// tabulated node within `snap_tol`
ScalarField rho_from_csv(const std::string& path, double snap_tol);

ScalarField psi_one();
ScalarField psi_half_plane(double x_threshold);
// (|phi'| / 2 Im phi)^(1/4), the XOR-Ising weight; unbounded near the
// boundary, so the declared bound is taken over the evaluation nodes
ScalarField psi_conformal_weight(const ConformalMap& map);

ScalarField theta_zero();
ScalarField theta_bump(Point center, double radius, double amplitude);
ScalarField theta_wave(Point center, double radius, double amplitude, double k_x, double k_y);

// --- Wick-ordered trigonometric functions ------------------------------------

double wick_cos(double w, double variance, double beta);
double wick_sin(double w, double variance, double beta);

// Numerical evaluation of int_{Lambda_eps} e^{beta^2 G^eps / 2} dx together
// with the declared bounds; bound() majorizes every sample of the tested
// observable.
struct BoundsLedger {
    double b_rho = 0.0;
    double b_psi = 0.0;
    double b_F = 0.0;
    double c_beta = 0.0;    // int e^{beta^2 G^eps(x)/2} dx over Lambda_eps
    double c_uniform = 0.0; // beta-uniform majorant int e^{G^eps(x)} dx (beta^2 < 2)

    double bound() const { return b_rho * b_psi * c_beta; }
};

// The tested Wick observable xi_eps = ([[cos(beta W_1^eps)]], rho)_{L^2(Lambda_eps; psi dx)}
// on a fixed cache, evaluated by quadrature over the cache grid. Immutable
// after construction; all evaluators are safe to call concurrently.
class WickFunctional {
public:
    WickFunctional(const MollifiedEigenCache& cache, ScalarField rho, ScalarField psi, double beta);

    double beta() const { return beta_; }
    const MollifiedEigenCache& cache() const { return *cache_; }
    const ScalarField& rho() const { return rho_; }
    const ScalarField& psi() const { return psi_; }
    int n_active() const { return static_cast<int>(active_.size()); }
    const std::vector<int>& active_nodes() const { return active_; }

    // deterministic beta = 0 value, int rho psi over Lambda_eps
    double integral_rho_psi() const;

    BoundsLedger ledger(double b_F = 0.0) const;

    // mollified field at the active nodes; columns are samples
    Eigen::MatrixXd field(const Eigen::MatrixXd& mode_matrix) const;

    double cos_value(const Eigen::Ref<const Eigen::VectorXd>& field_col) const;
    double sin_value(const Eigen::Ref<const Eigen::VectorXd>& field_col) const;

    // xi_eps for every column of the mode matrix
    Eigen::VectorXd cos_batch(const Eigen::MatrixXd& mode_matrix) const;

    double value(const ModeCoefficients& modes) const;
    double sine(const ModeCoefficients& modes) const;
    std::complex<double> chaos(const ModeCoefficients& modes) const;

    // weights and Wick factors at the active nodes (quadrature internals,
    // exposed for the configuration-sum routines)
    const Eigen::VectorXd& node_weight() const { return c_; }
    const Eigen::VectorXd& wick_factor() const { return f_; }
    // rows are sqrt(2 pi lambda_k) (e_k * eta_eps)(x) at the active nodes, so
    // row_a . row_b is the matched-truncation mollified Green G^{eps,N}(x_a, x_b)
    const Eigen::MatrixXd& mode_table() const { return table_; }

private:
    Eigen::VectorXd field_one(const ModeCoefficients& modes) const;

    const MollifiedEigenCache* cache_;
    ScalarField rho_;
    ScalarField psi_;
    double beta_;
    std::vector<int> active_;
    Eigen::VectorXd c_; // cell weight * rho * psi per active node
    Eigen::VectorXd f_; // exp(beta^2 variance / 2) per active node
    Eigen::MatrixXd table_; // weighted cache rows: field = table_ * modes
};

// F_rho_theta = int e^{beta^2 G^eps/2} sin(beta W + theta/2) sin(theta/2) rho dx,
// sharing the active set and field values of a psi = 1 Wick functional.
class ThetaFunctional {
public:
    ThetaFunctional(const WickFunctional& base, const ScalarField& theta);

    double value(const Eigen::Ref<const Eigen::VectorXd>& field_col) const;
    double value(const ModeCoefficients& modes) const;
    double bound() const; // b_rho * C_beta

    const WickFunctional& base() const { return *base_; }
    const Eigen::VectorXd& theta_values() const { return theta_; }

private:
    const WickFunctional* base_;
    Eigen::VectorXd theta_;
    Eigen::VectorXd half_sin_; // sin(theta/2) at active nodes
};

} // namespace sgl
