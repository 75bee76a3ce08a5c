#include "sampler.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace sgl {

ModeCoefficients sample_modes(int n_modes, std::uint64_t seed, std::uint64_t stream) {
    if (n_modes < 1) throw Error(ErrorCode::invalid_truncation, "need at least one mode");
    ModeCoefficients m;
    m.values.resize(static_cast<std::size_t>(n_modes));
    m.seed = seed;
    m.stream = stream;
    RngStream rng(seed, stream);
    rng.fill_normal(m.values);
    return m;
}

Eigen::MatrixXd sample_mode_matrix(int n_modes, int n_samples, std::uint64_t seed,
                                   std::uint64_t first_stream) {
    Eigen::MatrixXd out(n_modes, n_samples);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < n_samples; ++j) {
        RngStream rng(seed, first_stream + static_cast<std::uint64_t>(j));
        for (int k = 0; k < n_modes; ++k) out(k, j) = rng.normal();
    }
    return out;
}

double field_value(const SpectralBasis& basis, const ModeCoefficients& modes, Point x) {
    if (!basis.domain().contains(x))
        throw Error(ErrorCode::outside_domain, "field evaluation outside the domain");
    int n = std::min(basis.size(), modes.size());
    double acc = 0.0;
    for (int k = 1; k <= n; ++k)
        acc += std::sqrt(2.0 * M_PI * basis.lambda(k)) * modes.values[static_cast<std::size_t>(k - 1)] *
               basis.eigenfunction(k, x);
    return acc;
}

MollifiedEigenCache::MollifiedEigenCache(const SpectralBasis& basis, const Mollifier& mollifier,
                                         double eps, int nx, int ny) {
    if (!(eps > 0.0 && eps <= 1.0))
        throw Error(ErrorCode::parameter_out_of_range, "cache eps must lie in (0,1]");
    if (nx < 2 || ny < 2) throw Error(ErrorCode::invalid_argument, "cache grid needs nx, ny >= 2");
    const DomainSpec& dom = basis.domain();

    eps_ = eps;
    nx_ = nx;
    ny_ = ny;
    double bx0 = 0.0, by0 = 0.0, bx1 = dom.width(), by1 = dom.height();
    if (dom.kind() == DomainKind::unit_disk) {
        bx0 = -1.0;
        by0 = -1.0;
        bx1 = 1.0;
        by1 = 1.0;
    }
    hx_ = (bx1 - bx0) / nx;
    hy_ = (by1 - by0) / ny;
    x0_ = bx0;
    y0_ = by0;
    cell_weight_ = hx_ * hy_;

    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) {
            Point p{bx0 + (ix + 0.5) * hx_, by0 + (iy + 0.5) * hy_};
            if (!dom.in_shrunken(p, eps)) continue;
            points_.push_back(p);
            grid_index_.push_back(ix * ny + iy);
        }
    }
    if (points_.empty())
        throw Error(ErrorCode::grid_coverage, "Lambda_eps contains no grid nodes at this resolution");

    int n_modes = basis.size();
    factors_.resize(static_cast<std::size_t>(n_modes));
    lambdas_.resize(static_cast<std::size_t>(n_modes));
    grad_bounds_.resize(static_cast<std::size_t>(n_modes));
    kl_scale_.resize(n_modes);
    for (int k = 1; k <= n_modes; ++k) {
        const EigenMode& em = basis.mode(k);
        factors_[k - 1] = mollifier.hat(eps * std::sqrt(em.helmholtz));
        lambdas_[k - 1] = em.lambda;
        grad_bounds_[k - 1] = std::abs(factors_[k - 1]) * em.grad_bound;
        kl_scale_(k - 1) = std::sqrt(2.0 * M_PI * em.lambda);
    }

    table_.resize(static_cast<Eigen::Index>(points_.size()), n_modes);
    for (std::size_t g = 0; g < points_.size(); ++g)
        for (int k = 1; k <= n_modes; ++k)
            table_(static_cast<Eigen::Index>(g), k - 1) = factors_[k - 1] * basis.eigenfunction(k, points_[g]);

    variance_.resize(points_.size());
    for (std::size_t g = 0; g < points_.size(); ++g) {
        double acc = 0.0;
        for (int k = 0; k < n_modes; ++k) {
            double t = table_(static_cast<Eigen::Index>(g), k);
            acc += lambdas_[static_cast<std::size_t>(k)] * t * t;
        }
        variance_[g] = 2.0 * M_PI * acc;
    }
}

double MollifiedEigenCache::gradient_bound(const ModeCoefficients& modes) const {
    int n = std::min(n_modes(), modes.size());
    double acc = 0.0;
    for (int k = 0; k < n; ++k)
        acc += kl_scale_(k) * std::abs(modes.values[static_cast<std::size_t>(k)]) * grad_bounds_[static_cast<std::size_t>(k)];
    return acc;
}

int MollifiedEigenCache::index_of(Point p) const {
    int ix = static_cast<int>(std::floor((p.x - x0_) / hx_));
    int iy = static_cast<int>(std::floor((p.y - y0_) / hy_));
    if (ix < 0 || ix >= nx_ || iy < 0 || iy >= ny_)
        throw Error(ErrorCode::point_not_cached, "point outside the cache grid");
    int flat = ix * ny_ + iy;
    auto it = std::lower_bound(grid_index_.begin(), grid_index_.end(), flat);
    if (it == grid_index_.end() || *it != flat)
        throw Error(ErrorCode::point_not_cached, "point not in Lambda_eps at this resolution");
    std::size_t g = static_cast<std::size_t>(it - grid_index_.begin());
    if (dist(points_[g], p) > 1e-9 * std::max(hx_, hy_))
        throw Error(ErrorCode::point_not_cached, "off-grid evaluation is not supported");
    return static_cast<int>(g);
}

double MollifiedEigenCache::field_at(const ModeCoefficients& modes, int g) const {
    if (g < 0 || g >= n_points())
        throw Error(ErrorCode::point_not_cached, "cache node index out of range");
    int n = std::min(n_modes(), modes.size());
    double acc = 0.0;
    for (int k = 0; k < n; ++k)
        acc += table_(g, k) * kl_scale_(k) * modes.values[static_cast<std::size_t>(k)];
    return acc;
}

Eigen::MatrixXd MollifiedEigenCache::field_on_grid(const Eigen::MatrixXd& mode_matrix) const {
    if (mode_matrix.rows() != table_.cols())
        throw Error(ErrorCode::invalid_argument, "mode matrix row count must equal the cache truncation");
    return table_ * (kl_scale_.asDiagonal() * mode_matrix);
}

void MollifiedEigenCache::export_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot open " + path);
    char buf[256];
    out << "# sglab mollified eigenfunction cache\n";
    std::snprintf(buf, sizeof(buf), "key,%.17g,%d,%d,%d\n", eps_, n_modes(), nx_, ny_);
    out << buf;
    std::snprintf(buf, sizeof(buf), "grid,%.17g,%.17g,%.17g,%.17g,%.17g\n", x0_, y0_, hx_, hy_, cell_weight_);
    out << buf;
    for (int k = 0; k < n_modes(); ++k) {
        std::snprintf(buf, sizeof(buf), "mode,%.17g,%.17g,%.17g\n", lambdas_[k], factors_[k], grad_bounds_[k]);
        out << buf;
    }
    for (int g = 0; g < n_points(); ++g) {
        std::snprintf(buf, sizeof(buf), "node,%d,%.17g,%.17g,%.17g", grid_index_[g], points_[g].x,
                      points_[g].y, variance_[g]);
        out << buf;
        for (int k = 0; k < n_modes(); ++k) {
            std::snprintf(buf, sizeof(buf), ",%.17g", table_(g, k));
            out << buf;
        }
        out << "\n";
    }
}

MollifiedEigenCache MollifiedEigenCache::import_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
    MollifiedEigenCache c;
    std::string line;
    int n_modes = 0;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string tag;
        std::getline(ss, tag, ',');
        std::vector<double> vals;
        std::string tok;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        if (tag == "key") {
            if (vals.size() != 4) throw Error(ErrorCode::io_error, "malformed cache key line");
            c.eps_ = vals[0];
            n_modes = static_cast<int>(vals[1]);
            c.nx_ = static_cast<int>(vals[2]);
            c.ny_ = static_cast<int>(vals[3]);
        } else if (tag == "grid") {
            c.x0_ = vals[0];
            c.y0_ = vals[1];
            c.hx_ = vals[2];
            c.hy_ = vals[3];
            c.cell_weight_ = vals[4];
        } else if (tag == "mode") {
            c.lambdas_.push_back(vals[0]);
            c.factors_.push_back(vals[1]);
            c.grad_bounds_.push_back(vals[2]);
        } else if (tag == "node") {
            c.grid_index_.push_back(static_cast<int>(vals[0]));
            c.points_.push_back({vals[1], vals[2]});
            c.variance_.push_back(vals[3]);
            rows.emplace_back(vals.begin() + 4, vals.end());
        }
    }
    if (static_cast<int>(c.lambdas_.size()) != n_modes || rows.empty())
        throw Error(ErrorCode::io_error, "incomplete cache file " + path);
    c.table_.resize(static_cast<Eigen::Index>(rows.size()), n_modes);
    for (std::size_t g = 0; g < rows.size(); ++g) {
        if (static_cast<int>(rows[g].size()) != n_modes)
            throw Error(ErrorCode::io_error, "cache row width mismatch");
        for (int k = 0; k < n_modes; ++k) c.table_(static_cast<Eigen::Index>(g), k) = rows[g][static_cast<std::size_t>(k)];
    }
    c.kl_scale_.resize(n_modes);
    for (int k = 0; k < n_modes; ++k) c.kl_scale_(k) = std::sqrt(2.0 * M_PI * c.lambdas_[static_cast<std::size_t>(k)]);
    return c;
}

BridgeSplit bridge_split(const ModeCoefficients& modes_at_1, double t, std::uint64_t seed,
                         std::uint64_t stream) {
    if (!(t >= 0.0 && t <= 1.0))
        throw Error(ErrorCode::parameter_out_of_range, "bridge time must lie in [0,1]");
    BridgeSplit split;
    std::size_t n = modes_at_1.values.size();
    split.mean.resize(n);
    double rt = std::sqrt(t);
    for (std::size_t k = 0; k < n; ++k) split.mean[k] = rt * modes_at_1.values[k];
    if (t == 1.0) {
        split.fresh.values.assign(n, 0.0);
        split.fresh.seed = seed;
        split.fresh.stream = stream;
    } else {
        split.fresh = sample_modes(static_cast<int>(n), seed, stream);
    }
    return split;
}

} // namespace sgl
