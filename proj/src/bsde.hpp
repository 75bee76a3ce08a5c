#pragma once

#include <memory>

#include "wick.hpp"

namespace sgl {

// Bounded terminal condition of the quadratic BSDE, a functional of the time-1
// mode vector. Batch evaluation is the hot path; columns are samples.
class TerminalFunctional {
public:
    virtual ~TerminalFunctional() = default;

    virtual double eval(const Eigen::VectorXd& modes) const = 0;
    virtual Eigen::VectorXd eval_batch(const Eigen::MatrixXd& modes) const {
        Eigen::VectorXd out(modes.cols());
        for (Eigen::Index j = 0; j < modes.cols(); ++j) out(j) = eval(modes.col(j));
        return out;
    }
    // sup-norm bound; +inf marks diagnostic terminals outside the bounded class
    virtual double bound() const = 0;
    virtual int n_modes() const = 0;
};

// xi_eps itself: the Wick-cosine observable tested against rho psi dx
class WickCosineTerminal : public TerminalFunctional {
public:
    WickCosineTerminal(std::shared_ptr<const WickFunctional> functional)
        : w_(std::move(functional)), bound_(w_->ledger().bound()) {}

    double eval(const Eigen::VectorXd& modes) const override {
        return w_->cos_value(w_->field(modes).col(0));
    }
    Eigen::VectorXd eval_batch(const Eigen::MatrixXd& modes) const override { return w_->cos_batch(modes); }
    double bound() const override { return bound_; }
    int n_modes() const override { return w_->cache().n_modes(); }
    const WickFunctional& functional() const { return *w_; }

private:
    std::shared_ptr<const WickFunctional> w_;
    double bound_;
};

class ConstantTerminal : public TerminalFunctional {
public:
    ConstantTerminal(double c, int n_modes) : c_(c), n_(n_modes) {}
    double eval(const Eigen::VectorXd&) const override { return c_; }
    Eigen::VectorXd eval_batch(const Eigen::MatrixXd& modes) const override {
        return Eigen::VectorXd::Constant(modes.cols(), c_);
    }
    double bound() const override { return std::abs(c_); }
    int n_modes() const override { return n_; }

private:
    double c_;
    int n_;
};

// sigma * B_1^k; unbounded, used only as an engine sanity terminal with a
// closed-form solution
class LinearModeTerminal : public TerminalFunctional {
public:
    LinearModeTerminal(double sigma, int mode, int n_modes) : sigma_(sigma), k_(mode), n_(n_modes) {}
    double eval(const Eigen::VectorXd& modes) const override { return sigma_ * modes(k_ - 1); }
    Eigen::VectorXd eval_batch(const Eigen::MatrixXd& modes) const override {
        return sigma_ * modes.row(k_ - 1).transpose();
    }
    double bound() const override { return std::numeric_limits<double>::infinity(); }
    int n_modes() const override { return n_; }

private:
    double sigma_;
    int k_;
    int n_;
};

class CustomTerminal : public TerminalFunctional {
public:
    CustomTerminal(std::function<double(const Eigen::VectorXd&)> fn, double bound, int n_modes)
        : fn_(std::move(fn)), bound_(bound), n_(n_modes) {}
    double eval(const Eigen::VectorXd& modes) const override { return fn_(modes); }
    double bound() const override { return bound_; }
    int n_modes() const override { return n_; }

private:
    std::function<double(const Eigen::VectorXd&)> fn_;
    double bound_;
    int n_;
};

// base + delta * F, the shifted terminal of the variational equation
class ShiftedTerminal : public TerminalFunctional {
public:
    ShiftedTerminal(std::shared_ptr<const TerminalFunctional> base, double delta,
                    std::shared_ptr<const TerminalFunctional> f)
        : base_(std::move(base)), delta_(delta), f_(std::move(f)) {}

    double eval(const Eigen::VectorXd& modes) const override {
        return base_->eval(modes) + delta_ * f_->eval(modes);
    }
    Eigen::VectorXd eval_batch(const Eigen::MatrixXd& modes) const override {
        return base_->eval_batch(modes) + delta_ * f_->eval_batch(modes);
    }
    double bound() const override { return base_->bound() + std::abs(delta_) * f_->bound(); }
    int n_modes() const override { return base_->n_modes(); }

private:
    std::shared_ptr<const TerminalFunctional> base_;
    double delta_;
    std::shared_ptr<const TerminalFunctional> f_;
};

// Catalog of bounded functionals F(W_1) used for tilted expectations and the
// Taylor diagnostics.
std::shared_ptr<TerminalFunctional> f_cos_field_at(std::shared_ptr<const MollifiedEigenCache> cache,
                                                   Point probe);
std::shared_ptr<TerminalFunctional> f_tanh_mode(int mode, int n_modes);
std::shared_ptr<TerminalFunctional> f_scaled_sine(std::shared_ptr<const WickFunctional> functional);

// --- Monte Carlo operations ---------------------------------------------------

// terminal values on `samples` independent draws; deterministic per (seed, stream)
Eigen::VectorXd terminal_samples(const TerminalFunctional& terminal, int samples,
                                 std::uint64_t seed, std::uint64_t first_stream = 0);

// Y_0 = alpha^-1 log E[e^{alpha T}], delta-method error bar; the alpha -> 0
// limit (plain mean) is taken analytically.
Estimate cole_hopf_y0(const TerminalFunctional& terminal, double alpha, int samples,
                      std::uint64_t seed, std::uint64_t first_stream = 0);
Estimate cole_hopf_from_values(const Eigen::VectorXd& values, double alpha);

// Y_t at mode state b_t via nested Monte Carlo over the bridge decomposition.
double conditional_y(const TerminalFunctional& terminal, double alpha, double t,
                     const Eigen::VectorXd& b_t, int inner_samples, std::uint64_t seed,
                     std::uint64_t stream = 0);

// Central finite differences of conditional_y in each mode coordinate with
// common random numbers; these are the dB-coefficients zeta_k. The H^-1
// coordinate view is zeta_k / sqrt(2 pi lambda_k).
Eigen::VectorXd zeta_coefficients(const TerminalFunctional& terminal, double alpha, double t,
                                  const Eigen::VectorXd& b_t, double bump, int inner_samples,
                                  std::uint64_t seed, std::uint64_t stream = 0);

struct RegressionSpec {
    int leading_modes = 8;        // polynomial features use this many coordinates
    bool terminal_feature = true; // include the terminal at the bridge mean
    bool store_zeta_paths = false; // keep per-path zeta values (memory-heavy)
};

struct BsdeSolution {
    std::vector<double> times;
    double alpha = 0.0;
    double terminal_bound = 0.0;
    double y0 = 0.0;
    double y0_std_err = 0.0;
    Eigen::MatrixXd y;                      // paths x (steps+1)
    std::vector<Eigen::MatrixXd> zeta_coef; // per step: features x modes
    std::vector<Eigen::MatrixXd> zeta_paths; // per step: paths x modes, only on request
    std::vector<double> residual_rms;       // per step, reconstructed-increment RMS
    std::vector<double> mean_sumsq_zeta;    // per step, mean |zeta|^2 over paths
    Eigen::MatrixXd tail_qv_fit;            // paths x steps, fitted E[int_t^1 |zeta|^2 | F_t]
    std::vector<double> tail_qv_se;         // per step, std error of the tail estimate

    double max_abs_y() const { return y.cwiseAbs().maxCoeff(); }
};

// Backward least-squares time stepper for the purely quadratic driver
// (alpha/2) |zeta|^2. Throws SingularRegression when there are fewer paths
// than regression features.
BsdeSolution solve_bsde_regression(const TerminalFunctional& terminal, double alpha,
                                   int n_steps, int n_paths, std::uint64_t seed,
                                   const RegressionSpec& spec = {});

struct TiltWeight {
    Eigen::VectorXd gamma;   // self-normalized weights, batch mean exactly 1
    double normalizer = 0.0; // MC estimate of E[e^{alpha xi}]
    double split_mean = 0.0; // disjoint-halves estimator of E[Gamma]
    double split_std_err = 0.0;
};

TiltWeight tilt_weights(const TerminalFunctional& terminal, double alpha, int samples,
                        std::uint64_t seed, std::uint64_t first_stream = 0);

// E[Gamma^p] with an error bar, from the same weights
Estimate tilt_p_moment(const TiltWeight& tilt, double p);

// Approximate sine-Gordon expectation E[Gamma F(W_1)] by tilted Monte Carlo.
Estimate sg_expectation(const TerminalFunctional& f, const TerminalFunctional& terminal,
                        double alpha, int samples, std::uint64_t seed,
                        std::uint64_t first_stream = 0);

// --- BMO constants -------------------------------------------------------------

struct BmoConstants {
    double p = 0.0;
    double a = 0.0;
    double kappa = 0.0;
    double K = 0.0;
    bool K_valid = false;
    double p_bar = 0.0; // solves kappa(p_bar) = a
};

double bmo_kappa(double p);
BmoConstants bmo_constants(double p, double a);
// largest p for which K(p, a) is finite (the reverse Holder validity edge)
double bmo_max_valid_p(double a);

struct BmoCheckReport {
    double bound = 0.0;
    std::vector<double> max_estimate; // per grid time
    std::vector<double> std_err;
    double worst_margin = 0.0; // max over times of (estimate - bound) / sigma
    bool passed = true;
};

// Compares the fitted conditional tail quadratic variation against the bound
// 2 |alpha|^-2 e^{|alpha| (b_F + b_rho b_psi C_beta)}.
BmoCheckReport bmo_bound_check(const BsdeSolution& solution, const BoundsLedger& ledger);

// --- coupled epsilon sweep ------------------------------------------------------

struct SweepRow {
    double eps = 0.0;
    double y0 = 0.0;
    double y0_std_err = 0.0;
    double diff_prev = 0.0; // |Y0(eps_prev) - Y0(eps)| on coupled samples
    double gamma_split_mean = 0.0;
    double gamma_split_std_err = 0.0;
    std::vector<Estimate> f_expectations;
};

struct SweepTable {
    std::vector<SweepRow> rows;
    std::vector<std::string> f_names;
    bool cauchy_decreasing = true;
};

SweepTable epsilon_sweep(const SpectralBasis& basis, const Mollifier& mollifier,
                         const ScalarField& rho, const ScalarField& psi, double alpha, double beta,
                         const std::vector<double>& eps_list, int nx, int ny, int samples,
                         std::uint64_t seed);

} // namespace sgl
