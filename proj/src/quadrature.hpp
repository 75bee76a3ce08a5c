#pragma once

#include <cstddef>
#include <vector>

#include "common.hpp"

namespace sgl {

struct QuadRule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre rule on [-1,1].
QuadRule1D gauss_legendre(int n);

// Gauss-Legendre rule mapped to [a,b].
QuadRule1D gauss_legendre(int n, double a, double b);

// Nodes and weights over the unit ball in polar form (GL in radius, uniform in
// angle, Jacobian folded into the weights): integrates f over {|u| <= 1}.
struct BallRule {
    std::vector<Point> nodes;
    std::vector<double> weights;
};

BallRule unit_ball_rule(int n_radial, int n_angular);

} // namespace sgl
