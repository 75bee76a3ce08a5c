#include "quadrature.hpp"

#include <cmath>

namespace sgl {

QuadRule1D gauss_legendre(int n) {
    if (n < 1) throw Error(ErrorCode::invalid_argument, "gauss_legendre: n >= 1 required");
    QuadRule1D rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    // Newton iteration on Legendre polynomials, symmetric pairs
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.weights[i] = w;
        rule.nodes[n - 1 - i] = x;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

QuadRule1D gauss_legendre(int n, double a, double b) {
    QuadRule1D base = gauss_legendre(n);
    double mid = 0.5 * (a + b);
    double half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        base.nodes[i] = mid + half * base.nodes[i];
        base.weights[i] *= half;
    }
    return base;
}

BallRule unit_ball_rule(int n_radial, int n_angular) {
    QuadRule1D radial = gauss_legendre(n_radial, 0.0, 1.0);
    BallRule rule;
    rule.nodes.reserve(static_cast<std::size_t>(n_radial) * n_angular);
    rule.weights.reserve(rule.nodes.capacity());
    double dtheta = 2.0 * M_PI / n_angular;
    for (int i = 0; i < n_radial; ++i) {
        double r = radial.nodes[i];
        double wr = radial.weights[i] * r * dtheta; // polar Jacobian
        for (int j = 0; j < n_angular; ++j) {
            double theta = dtheta * (j + 0.5);
            rule.nodes.push_back({r * std::cos(theta), r * std::sin(theta)});
            rule.weights.push_back(wr);
        }
    }
    return rule;
}

} // namespace sgl
