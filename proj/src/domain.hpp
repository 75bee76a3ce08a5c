#pragma once

#include <complex>
#include <functional>
#include <memory>

#include "common.hpp"
#include "quadrature.hpp"

namespace sgl {

// Conformal bijection from a planar domain onto the upper half-plane,
// with its complex derivative.
struct ConformalMap {
    std::function<std::complex<double>(Point)> forward;
    std::function<std::complex<double>(Point)> derivative;
};

// phi(z) = i (1+z) / (1-z), unit disk -> H+
ConformalMap mobius_disk_map();

enum class DomainKind { rectangle, unit_disk, conformal };

// Bounded simply connected domain. Rectangles live on [0,w] x [0,h], the unit
// disk is centered at the origin. A conformal domain is described only through
// its map onto the upper half-plane; it has no spectral basis.
class DomainSpec {
public:
    static DomainSpec rectangle(double width, double height);
    static DomainSpec unit_disk();
    static DomainSpec conformal(ConformalMap map,
                                std::function<bool(Point)> contains,
                                std::function<double(Point)> boundary_distance,
                                double area);

    DomainKind kind() const { return kind_; }
    double width() const { return width_; }
    double height() const { return height_; }
    double area() const { return area_; }

    bool contains(Point p) const;
    // Euclidean distance to the complement; the shrunken domain of the
    // mollification scheme is {p : boundary_distance(p) > 2 eps}.
    double boundary_distance(Point p) const;
    bool in_shrunken(Point p, double eps) const { return boundary_distance(p) > 2.0 * eps; }

    // The half-plane map: built-in for the disk, user supplied for conformal
    // domains, absent for rectangles.
    bool has_conformal_map() const { return map_.forward != nullptr; }
    const ConformalMap& conformal_map() const;

private:
    DomainKind kind_ = DomainKind::rectangle;
    double width_ = 1.0;
    double height_ = 1.0;
    double area_ = 1.0;
    ConformalMap map_;
    std::function<bool(Point)> contains_fn_;
    std::function<double(Point)> bdist_fn_;
};

// Radial C^infinity bump supported in the closed unit ball, normalized to unit
// mass. `hat(s)` is the radial Fourier transform 2*pi*int_0^1 eta(r) J0(s r) r dr,
// which is the exact factor picked up by a Helmholtz mode of frequency s under
// convolution with eta.
class Mollifier {
public:
    enum class Profile { bump, bump_sq };

    explicit Mollifier(Profile profile = Profile::bump, int n_radial = 64);

    Profile profile() const { return profile_; }
    // unnormalized radial profile
    double raw_profile(double r) const;
    // normalized density value at a point of the unit ball
    double density(Point u) const;
    // density of the eps-rescaled mollifier eta_eps(v) = eps^-2 eta(v/eps)
    double density_eps(Point v, double eps) const;
    double normalization() const { return norm_; }

    double hat(double s) const;

    // quadrature rule over the unit ball with the mollifier density folded in:
    // sum_i weight[i] f(node[i]) integrates eta(u) f(u) du
    BallRule weighted_ball_rule(int n_radial, int n_angular) const;

private:
    Profile profile_;
    double norm_ = 1.0;
    QuadRule1D radial_; // GL rule on [0,1] used by hat()
};

} // namespace sgl
