// Batch front end for the sglab experiments. Thin by design: argument parsing
// here, everything else behind the C API of the shared library.

#include <CLI11.hpp>
#include <sglab.h>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"sglab: GFF / sine-Gordon / Coulomb-gas numerical laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed_override = 0;
    int threads = 0;

    auto* run = app.add_subcommand("run", "execute one experiment subcommand");
    std::string name;
    run->add_option("name", name,
                    "one of: green-check, weyl, wick-check, bsde-run, taylor-check, partition, "
                    "charge-cf, xor-check, epsilon-sweep")
        ->required();
    run->add_option("--config", config_path, "experiment configuration file")->required();
    run->add_option("--seed", seed_override, "override the configured seed");
    run->add_option("--threads", threads, "cap worker threads (0 = default)");
    run->add_option("--out", out_dir, "output directory (default $SGLAB_OUT, then '.')");

    auto* validate = app.add_subcommand("validate", "validate a configuration without running");
    validate->add_option("--config", config_path, "experiment configuration file")->required();

    auto* version = app.add_subcommand("version", "print the library version");

    CLI11_PARSE(app, argc, argv);

    if (version->parsed()) {
        std::cout << sgl_version() << "\n";
        return 0;
    }

    if (validate->parsed()) {
        std::vector<char> report(1 << 16);
        sgl_status status = sgl_validate(config_path.c_str(), report.data(), report.size());
        if (status != SGL_OK) {
            std::cerr << "error: " << sgl_last_error() << "\n";
            return 1;
        }
        std::cout << report.data();
        return 0;
    }

    std::vector<char> summary(1 << 16);
    sgl_status status = sgl_run(name.c_str(), config_path.c_str(), seed_override, threads,
                                out_dir.empty() ? nullptr : out_dir.c_str(), summary.data(),
                                summary.size());
    std::cout << summary.data();
    if (status == SGL_OK) return 0;
    if (status == SGL_ERR_CHECKS_FAILED) {
        std::cerr << "error: one or more checks failed\n";
        return 2;
    }
    std::cerr << "error: " << sgl_last_error() << "\n";
    return 1;
}
