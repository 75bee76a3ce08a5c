#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgl {

enum class ErrorCode {
    invalid_argument,
    invalid_truncation,
    unsupported_domain,
    index_out_of_range,
    outside_domain,
    outside_shrunken_domain,
    coincident_points,
    missing_basis,
    negative_variance,
    beta_out_of_regime,
    grid_coverage,
    parameter_out_of_range,
    degenerate_bump,
    singular_regression,
    dimension_too_large,
    point_not_cached,
    config_error,
    io_error,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline std::complex<double> to_complex(Point p) { return {p.x, p.y}; }
inline Point to_point(std::complex<double> z) { return {z.real(), z.imag()}; }

inline double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// --- seeded RNG streams -----------------------------------------------------
//
// Per-sample generators are derived from (seed, stream) with SplitMix64, so a
// Monte Carlo loop produces the same draws for sample i no matter how the loop
// is scheduled across threads.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic sub-seed for nested sampling layers, so inner draws never
// collide with the outer stream numbering.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (tag * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    splitmix64(s);
    return splitmix64(s);
}

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed;
        std::uint64_t a = splitmix64(s);
        s = stream ^ 0xda3e39cb94b95bdbULL;
        std::uint64_t b = splitmix64(s);
        state_ = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
        // burn-in decorrelates nearby (seed, stream) keys
        splitmix64(state_);
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform on (0,1)
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal, Box-Muller; consumes exactly two uniforms per pair
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double c = std::cos(2.0 * M_PI * u2);
        double s = std::sin(2.0 * M_PI * u2);
        spare_ = r * s;
        have_spare_ = true;
        return r * c;
    }

    void fill_normal(std::span<double> out) {
        for (double& v : out) v = normal();
    }

private:
    std::uint64_t state_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// --- deterministic reductions -----------------------------------------------

// Pairwise sum with a fixed association order; the result depends only on the
// contents of `v`, not on how the values were produced.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double mean(std::span<const double> v) {
    if (v.empty()) throw Error(ErrorCode::invalid_argument, "mean of empty sample");
    return pairwise_sum(v) / static_cast<double>(v.size());
}

// unbiased sample variance
inline double variance(std::span<const double> v) {
    if (v.size() < 2) throw Error(ErrorCode::invalid_argument, "variance needs >= 2 samples");
    double m = mean(v);
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
    return pairwise_sum(sq) / static_cast<double>(v.size() - 1);
}

// standard error of the sample mean
inline double std_error(std::span<const double> v) {
    return std::sqrt(variance(v) / static_cast<double>(v.size()));
}

struct Estimate {
    double value = 0.0;
    double std_err = 0.0;
};

} // namespace sgl
