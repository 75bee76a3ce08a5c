#pragma once

#include <map>
#include <string>
#include <vector>

#include "coulomb.hpp"

namespace sgl {

// Flat "key = value" configuration with [section] headers. Keys are stored as
// "section.key"; unknown keys and regime violations are named errors.
class ExperimentConfig {
public:
    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_string(const std::string& text);

    // named-field validation; returns the effective settings (defaults filled in)
    std::vector<std::string> validate() const;

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_num(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

    // resolved objects
    DomainSpec domain() const;
    ScalarField rho() const;
    ScalarField psi() const;
    ScalarField theta() const;
    Mollifier::Profile mollifier_profile() const;
    std::uint64_t seed() const { return static_cast<std::uint64_t>(get_num("run.seed", 20240801)); }
    double alpha() const { return get_num("coupling.alpha", 0.5); }
    double beta() const { return get_num("coupling.beta", 1.0); }
    std::vector<double> eps_list() const { return get_list("eps.list", {0.2, 0.1, 0.05}); }

private:
    std::map<std::string, std::string> kv_;
};

struct CheckLine {
    std::string name;
    bool passed = true;
    double value = 0.0;
    double tolerance = 0.0;
};

struct RunResult {
    std::string subcommand;
    std::vector<CheckLine> checks;
    std::vector<std::string> artifacts;
    double wall_clock_sec = 0.0;

    bool ok() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

// Known subcommands: green-check, weyl, wick-check, bsde-run, taylor-check,
// partition, charge-cf, xor-check, epsilon-sweep. Writes CSV artifacts plus a
// JSON manifest into `out_dir` and returns the per-check outcomes.
RunResult run_experiment(const std::string& subcommand, const ExperimentConfig& config,
                         const std::string& out_dir, std::uint64_t seed_override = 0,
                         int threads = 0);

std::string library_version();

} // namespace sgl
