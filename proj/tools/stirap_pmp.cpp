#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "stirap/cli.hpp"

int main(int argc, char** argv) {
    if (const char* level = std::getenv("STIRAP_PMP_LOG"))
        spdlog::set_level(spdlog::level::from_str(level));

    CLI::App app{"STIRAP pulse optimisation with adjoint gradients"};
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::string backend;
    std::string params_file;
    stirap::cli::Options opts;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"spectrum", "transmon levels, transitions and frame detunings"},
        {"simulate", "propagate the configured pulses and write populations"},
        {"optimize", "optimise the six Gaussian pulse parameters"},
        {"gradcheck", "compare adjoint and finite-difference gradients"},
        {"scan1d", "one-dimensional robustness scan"},
        {"scan2d", "two-dimensional robustness scan"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "JSON configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        sub->add_option("--set", overrides, "override a config key, e.g. --set grid.duration=60");
        sub->add_option("--backend", backend, "trust-region or gradient-descent");
        sub->add_option("--workers", opts.workers, "worker threads for scans")->check(CLI::PositiveNumber);
        if (name == "simulate" || name == "gradcheck")
            sub->add_option("--params", params_file, "JSON file with pulse parameters");
        if (name == "gradcheck")
            sub->add_flag("--corrupt-gradient", opts.corrupt_gradient, "perturb the analytic gradient (negative control)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : stirap::cli::kConfigFailure;
    }

    return stirap::cli::guarded([&] {
        if (!out_dir.empty()) opts.out_dir = out_dir;
        if (!backend.empty()) opts.backend = stirap::backend_from_string(backend);
        if (!params_file.empty()) opts.params_file = params_file;
        const auto* sub = app.get_subcommands().front();
        return stirap::cli::dispatch(sub->get_name(), config, overrides, opts);
    });
}
