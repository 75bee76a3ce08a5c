#include "domain.hpp"

#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <cmath>

namespace sgl {

ConformalMap mobius_disk_map() {
    ConformalMap map;
    map.forward = [](Point p) {
        std::complex<double> z = to_complex(p);
        return std::complex<double>(0.0, 1.0) * (1.0 + z) / (1.0 - z);
    };
    map.derivative = [](Point p) {
        std::complex<double> z = to_complex(p);
        std::complex<double> d = 1.0 - z;
        return std::complex<double>(0.0, 2.0) / (d * d);
    };
    return map;
}

DomainSpec DomainSpec::rectangle(double width, double height) {
    if (!(width > 0.0) || !(height > 0.0))
        throw Error(ErrorCode::invalid_argument, "rectangle sides must be positive");
    DomainSpec d;
    d.kind_ = DomainKind::rectangle;
    d.width_ = width;
    d.height_ = height;
    d.area_ = width * height;
    return d;
}

DomainSpec DomainSpec::unit_disk() {
    DomainSpec d;
    d.kind_ = DomainKind::unit_disk;
    d.width_ = 2.0;
    d.height_ = 2.0;
    d.area_ = M_PI;
    d.map_ = mobius_disk_map();
    return d;
}

DomainSpec DomainSpec::conformal(ConformalMap map, std::function<bool(Point)> contains,
                                 std::function<double(Point)> boundary_distance, double area) {
    if (!(area > 0.0)) throw Error(ErrorCode::invalid_argument, "domain area must be positive");
    if (!map.forward || !map.derivative)
        throw Error(ErrorCode::invalid_argument, "conformal domain needs forward map and derivative");
    DomainSpec d;
    d.kind_ = DomainKind::conformal;
    d.area_ = area;
    d.map_ = std::move(map);
    d.contains_fn_ = std::move(contains);
    d.bdist_fn_ = std::move(boundary_distance);
    return d;
}

bool DomainSpec::contains(Point p) const {
    switch (kind_) {
        case DomainKind::rectangle:
            return p.x > 0.0 && p.x < width_ && p.y > 0.0 && p.y < height_;
        case DomainKind::unit_disk:
            return p.x * p.x + p.y * p.y < 1.0;
        case DomainKind::conformal:
            if (!contains_fn_) throw Error(ErrorCode::unsupported_domain, "conformal domain has no membership test");
            return contains_fn_(p);
    }
    return false;
}

double DomainSpec::boundary_distance(Point p) const {
    switch (kind_) {
        case DomainKind::rectangle: {
            double d = std::min(std::min(p.x, width_ - p.x), std::min(p.y, height_ - p.y));
            return std::max(d, 0.0);
        }
        case DomainKind::unit_disk:
            return std::max(1.0 - std::hypot(p.x, p.y), 0.0);
        case DomainKind::conformal:
            if (!bdist_fn_) throw Error(ErrorCode::unsupported_domain, "conformal domain has no boundary distance");
            return bdist_fn_(p);
    }
    return 0.0;
}

const ConformalMap& DomainSpec::conformal_map() const {
    if (!has_conformal_map())
        throw Error(ErrorCode::unsupported_domain, "domain has no conformal map onto the half-plane");
    return map_;
}

Mollifier::Mollifier(Profile profile, int n_radial) : profile_(profile) {
    radial_ = gauss_legendre(n_radial, 0.0, 1.0);
    double mass = 0.0;
    for (int i = 0; i < n_radial; ++i)
        mass += radial_.weights[i] * raw_profile(radial_.nodes[i]) * radial_.nodes[i];
    mass *= 2.0 * M_PI;
    norm_ = 1.0 / mass;
}

double Mollifier::raw_profile(double r) const {
    if (r >= 1.0) return 0.0;
    double q = 1.0 - r * r;
    switch (profile_) {
        case Profile::bump:
            return std::exp(-1.0 / q);
        case Profile::bump_sq:
            return std::exp(-1.0 / (q * q));
    }
    return 0.0;
}

double Mollifier::density(Point u) const { return norm_ * raw_profile(std::hypot(u.x, u.y)); }

double Mollifier::density_eps(Point v, double eps) const {
    if (!(eps > 0.0)) throw Error(ErrorCode::parameter_out_of_range, "mollifier scale must be positive");
    return density({v.x / eps, v.y / eps}) / (eps * eps);
}

double Mollifier::hat(double s) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < radial_.nodes.size(); ++i) {
        double r = radial_.nodes[i];
        acc += radial_.weights[i] * raw_profile(r) * gsl_sf_bessel_J0(s * r) * r;
    }
    return 2.0 * M_PI * norm_ * acc;
}

BallRule Mollifier::weighted_ball_rule(int n_radial, int n_angular) const {
    BallRule rule = unit_ball_rule(n_radial, n_angular);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) rule.weights[i] *= density(rule.nodes[i]);
    return rule;
}

} // namespace sgl
