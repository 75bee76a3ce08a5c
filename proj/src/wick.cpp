#include "wick.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace sgl {

ScalarField rho_bump(Point center, double radius) {
    if (!(radius > 0.0)) throw Error(ErrorCode::invalid_argument, "bump radius must be positive");
    ScalarField f;
    f.name = "bump";
    f.bound = 1.0;
    f.eval = [center, radius](Point p) {
        double s2 = (dist(p, center) / radius);
        s2 *= s2;
        if (s2 >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - s2));
    };
    f.in_support = [center, radius](Point p) { return dist(p, center) < radius; };
    return f;
}

ScalarField rho_sine_window(const DomainSpec& rectangle) {
    if (rectangle.kind() != DomainKind::rectangle)
        throw Error(ErrorCode::unsupported_domain, "sine window is defined on rectangles");
    double w = rectangle.width(), h = rectangle.height();
    ScalarField f;
    f.name = "sine_window";
    f.bound = 1.0;
    f.eval = [w, h](Point p) {
        if (p.x <= 0.0 || p.x >= w || p.y <= 0.0 || p.y >= h) return 0.0;
        double s = std::sin(M_PI * p.x / w) * std::sin(M_PI * p.y / h);
        return s * s;
    };
    return f;
}

ScalarField rho_disk_indicator(Point center, double radius) {
    ScalarField f;
    f.name = "disk_indicator";
    f.bound = 1.0;
    f.eval = [center, radius](Point p) { return dist(p, center) <= radius ? 1.0 : 0.0; };
    f.in_support = [center, radius](Point p) { return dist(p, center) <= radius; };
    return f;
}

ScalarField rho_from_csv(const std::string& path, double snap_tol) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
    auto table = std::make_shared<std::vector<std::pair<Point, double>>>();
    double bound = 0.0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string tok;
        double v[3];
        int i = 0;
        while (std::getline(ss, tok, ',') && i < 3) v[i++] = std::stod(tok);
        if (i != 3) throw Error(ErrorCode::io_error, "grid table rows must be x,y,value");
        table->push_back({{v[0], v[1]}, v[2]});
        bound = std::max(bound, std::abs(v[2]));
    }
    if (table->empty()) throw Error(ErrorCode::io_error, "empty grid table " + path);
    ScalarField f;
    f.name = "table:" + path;
    f.bound = bound;
    f.eval = [table, snap_tol](Point p) {
        for (const auto& [q, v] : *table)
            if (dist(p, q) <= snap_tol) return v;
        return 0.0;
    };
    return f;
}

ScalarField psi_one() {
    ScalarField f;
    f.name = "one";
    f.bound = 1.0;
    f.eval = [](Point) { return 1.0; };
    return f;
}

ScalarField psi_half_plane(double x_threshold) {
    ScalarField f;
    f.name = "half_plane";
    f.bound = 1.0;
    f.eval = [x_threshold](Point p) { return p.x >= x_threshold ? 1.0 : 0.0; };
    return f;
}

ScalarField psi_conformal_weight(const ConformalMap& map) {
    ScalarField f;
    f.name = "conformal_weight";
    f.bound = 0.0; // effective bound is taken over the evaluation nodes
    auto fwd = map.forward;
    auto der = map.derivative;
    f.eval = [fwd, der](Point p) {
        double im = fwd(p).imag();
        if (!(im > 0.0)) throw Error(ErrorCode::outside_domain, "conformal weight outside the domain");
        return std::pow(std::abs(der(p)) / (2.0 * im), 0.25);
    };
    return f;
}

ScalarField theta_zero() {
    ScalarField f;
    f.name = "zero";
    f.bound = 0.0;
    f.eval = [](Point) { return 0.0; };
    return f;
}

ScalarField theta_bump(Point center, double radius, double amplitude) {
    ScalarField f = rho_bump(center, radius);
    f.name = "theta_bump";
    f.bound = std::abs(amplitude);
    auto base = f.eval;
    f.eval = [base, amplitude](Point p) { return amplitude * base(p); };
    return f;
}

ScalarField theta_wave(Point center, double radius, double amplitude, double k_x, double k_y) {
    ScalarField f = rho_bump(center, radius);
    f.name = "theta_wave";
    f.bound = std::abs(amplitude);
    auto base = f.eval;
    f.eval = [base, amplitude, k_x, k_y](Point p) {
        return amplitude * base(p) * std::cos(k_x * p.x + k_y * p.y);
    };
    return f;
}

double wick_cos(double w, double variance, double beta) {
    if (variance < 0.0) throw Error(ErrorCode::negative_variance, "Wick variance must be nonnegative");
    return std::exp(0.5 * beta * beta * variance) * std::cos(beta * w);
}

double wick_sin(double w, double variance, double beta) {
    if (variance < 0.0) throw Error(ErrorCode::negative_variance, "Wick variance must be nonnegative");
    return std::exp(0.5 * beta * beta * variance) * std::sin(beta * w);
}

WickFunctional::WickFunctional(const MollifiedEigenCache& cache, ScalarField rho, ScalarField psi,
                               double beta)
    : cache_(&cache), rho_(std::move(rho)), psi_(std::move(psi)), beta_(beta) {
    if (!(beta * beta < 2.0))
        throw Error(ErrorCode::beta_out_of_regime,
                    "beta^2 must stay below 2, the finite ultraviolet regime");
    const auto& pts = cache.points();
    std::vector<double> c, f;
    for (int g = 0; g < cache.n_points(); ++g) {
        if (!rho_.supported_at(pts[static_cast<std::size_t>(g)])) continue;
        double r = rho_.eval(pts[static_cast<std::size_t>(g)]);
        double s = psi_.eval(pts[static_cast<std::size_t>(g)]);
        if (r == 0.0 || s == 0.0) continue;
        active_.push_back(g);
        c.push_back(cache.weight(g) * r * s);
        f.push_back(std::exp(0.5 * beta * beta * cache.variance(g)));
    }
    if (active_.empty())
        throw Error(ErrorCode::grid_coverage, "cache grid does not cover supp(rho) inside Lambda_eps");
    c_ = Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    f_ = Eigen::Map<Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    table_.resize(static_cast<Eigen::Index>(active_.size()), cache.table().cols());
    Eigen::VectorXd scale(cache.n_modes());
    for (int k = 1; k <= cache.n_modes(); ++k)
        scale(k - 1) = std::sqrt(2.0 * M_PI * cache.lambda(k));
    for (std::size_t a = 0; a < active_.size(); ++a)
        table_.row(static_cast<Eigen::Index>(a)) =
            cache.table().row(active_[a]).cwiseProduct(scale.transpose());
}

double WickFunctional::integral_rho_psi() const { return c_.sum(); }

BoundsLedger WickFunctional::ledger(double b_F) const {
    BoundsLedger l;
    l.b_rho = rho_.bound;
    l.b_psi = psi_.bound;
    l.b_F = b_F;
    for (int g = 0; g < cache_->n_points(); ++g) {
        double v = cache_->variance(g);
        l.c_beta += cache_->weight(g) * std::exp(0.5 * beta_ * beta_ * v);
        l.c_uniform += cache_->weight(g) * std::exp(v);
        if (psi_.bound == 0.0) // node-wise bound for weights without a global one
            l.b_psi = std::max(l.b_psi, std::abs(psi_.eval(cache_->points()[static_cast<std::size_t>(g)])));
    }
    return l;
}

Eigen::MatrixXd WickFunctional::field(const Eigen::MatrixXd& mode_matrix) const {
    return table_ * mode_matrix;
}

double WickFunctional::cos_value(const Eigen::Ref<const Eigen::VectorXd>& field_col) const {
    double acc = 0.0;
    for (Eigen::Index a = 0; a < c_.size(); ++a)
        acc += c_(a) * f_(a) * std::cos(beta_ * field_col(a));
    return acc;
}

double WickFunctional::sin_value(const Eigen::Ref<const Eigen::VectorXd>& field_col) const {
    double acc = 0.0;
    for (Eigen::Index a = 0; a < c_.size(); ++a)
        acc += c_(a) * f_(a) * std::sin(beta_ * field_col(a));
    return acc;
}

Eigen::VectorXd WickFunctional::cos_batch(const Eigen::MatrixXd& mode_matrix) const {
    Eigen::MatrixXd w = field(mode_matrix);
    Eigen::VectorXd out(w.cols());
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < w.cols(); ++j) out(j) = cos_value(w.col(j));
    return out;
}

Eigen::VectorXd WickFunctional::field_one(const ModeCoefficients& modes) const {
    Eigen::Map<const Eigen::VectorXd> xi(modes.values.data(), static_cast<Eigen::Index>(modes.values.size()));
    if (xi.size() != table_.cols())
        throw Error(ErrorCode::invalid_argument, "mode vector length must equal the cache truncation");
    return table_ * xi;
}

double WickFunctional::value(const ModeCoefficients& modes) const { return cos_value(field_one(modes)); }

double WickFunctional::sine(const ModeCoefficients& modes) const { return sin_value(field_one(modes)); }

std::complex<double> WickFunctional::chaos(const ModeCoefficients& modes) const {
    Eigen::VectorXd w = field_one(modes);
    return {cos_value(w), sin_value(w)};
}

ThetaFunctional::ThetaFunctional(const WickFunctional& base, const ScalarField& theta)
    : base_(&base) {
    if (base.psi().name != "one")
        throw Error(ErrorCode::invalid_argument,
                    "the phase functional is defined with unit density; build the base with psi = one");
    const auto& pts = base.cache().points();
    theta_.resize(base.n_active());
    half_sin_.resize(base.n_active());
    for (int a = 0; a < base.n_active(); ++a) {
        theta_(a) = theta.eval(pts[static_cast<std::size_t>(base.active_nodes()[static_cast<std::size_t>(a)])]);
        half_sin_(a) = std::sin(0.5 * theta_(a));
    }
}

double ThetaFunctional::value(const Eigen::Ref<const Eigen::VectorXd>& field_col) const {
    const Eigen::VectorXd& c = base_->node_weight();
    const Eigen::VectorXd& f = base_->wick_factor();
    double beta = base_->beta();
    double acc = 0.0;
    for (Eigen::Index a = 0; a < c.size(); ++a)
        acc += c(a) * f(a) * std::sin(beta * field_col(a) + 0.5 * theta_(a)) * half_sin_(a);
    return acc;
}

double ThetaFunctional::value(const ModeCoefficients& modes) const {
    Eigen::MatrixXd xi = Eigen::Map<const Eigen::VectorXd>(
        modes.values.data(), static_cast<Eigen::Index>(modes.values.size()));
    return value(base_->field(xi).col(0));
}

double ThetaFunctional::bound() const { return base_->ledger().b_rho * base_->ledger().c_beta; }

} // namespace sgl
