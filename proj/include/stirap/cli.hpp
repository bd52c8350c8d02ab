#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "stirap/config.hpp"
#include "stirap/gradcheck.hpp"
#include "stirap/optimizer.hpp"
#include "stirap/pmp.hpp"
#include "stirap/robustness.hpp"

namespace stirap::cli {

enum ExitCode : int { kSuccess = 0, kConfigFailure = 1, kNumericalFailure = 2, kCheckFailure = 3 };

struct Options {
    std::optional<std::string> out_dir;  // overrides output_dir from the config
    std::optional<Backend> backend;
    int workers = 1;
    bool corrupt_gradient = false;  // gradcheck negative control
    std::optional<std::string> params_file;
};

/// Comma-separated rows, doubles at 17 significant digits.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw ConfigError("cannot write '" + path.string() + "'");
        out_ << std::setprecision(17);
        row(header);
    }

    template <typename... Ts>
    void write(const Ts&... cells) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cells, first = false), ...);
        out_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    void row(const std::vector<double>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

namespace detail {

inline std::filesystem::path prepare_output(const RunConfig& c, const Options& o) {
    const std::filesystem::path dir = o.out_dir ? *o.out_dir : c.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw ConfigError("output directory '" + dir.string() + "' is not writable");
    const auto probe = dir / ".write_test";
    {
        std::ofstream f(probe);
        if (!f) throw ConfigError("output directory '" + dir.string() + "' is not writable");
    }
    std::filesystem::remove(probe, ec);
    return dir;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    f << j.dump(2) << '\n';
}

inline void write_config(const std::filesystem::path& dir, const RunConfig& c) {
    write_json(dir / "config.json", to_json(c));
}

inline GaussianParams params_source(const RunConfig& c, const Options& o) {
    if (!o.params_file) return c.pulses;
    const json j = read_json_file(*o.params_file);
    return stirap::detail::parse_pulses(j.contains("params") ? j.at("params") : j, "params");
}

inline void write_trajectory(const std::filesystem::path& path, const Trajectory& traj, const SubspacePartition& part) {
    const PopulationRecord rec = populations(traj, part);
    std::vector<std::string> header{"t"};
    for (int n = 0; n < part.dimension(); ++n) header.push_back("P" + std::to_string(n));
    header.insert(header.end(), {"leakage", "norm"});
    CsvWriter csv(path, header);
    for (int k = 0; k < traj.grid.nodes(); ++k) {
        std::vector<double> row{traj.grid.time(k)};
        for (int n = 0; n < part.dimension(); ++n) row.push_back(rec.populations(k, n));
        row.push_back(rec.leakage[k]);
        row.push_back(traj.states[k].squaredNorm());
        csv.row(row);
    }
}

inline json simulation_summary(const Model& m, const RunConfig& c, const GaussianParams& p, const Trajectory& traj) {
    const auto part = partition(m.system, c.weights.target_level);
    const PopulationRecord rec = populations(traj, part);
    const ObjectiveReport obj = objective_from_trajectory(traj, c.weights);
    return {{"fidelity", rec.final_fidelity},
            {"max_leakage", rec.max_leakage},
            {"effective_duration", effective_duration(p, m.grid.duration)},
            {"objective", obj.total},
            {"terminal_cost", obj.terminal},
            {"running_cost", obj.running},
            {"counterintuitive", is_counterintuitive(p)},
            {"duration", m.grid.duration},
            {"steps", m.grid.steps},
            {"params", stirap::detail::pulses_json(p)}};
}

inline json simulate_to(const std::filesystem::path& csv, const Model& m, const RunConfig& c,
                        const GaussianParams& p) {
    const Trajectory traj = propagate(m.system, p, m.grid, basis_state(m.system.dimension(), 0));
    write_trajectory(csv, traj, partition(m.system, c.weights.target_level));
    return simulation_summary(m, c, p, traj);
}

struct OptimizationOutcome {
    GaussianParams initial;
    GaussianParams optimized;
    json report;
};

inline OptimizationOutcome optimize(const RunConfig& c, const Model& m, Backend backend,
                                    const std::optional<std::filesystem::path>& convergence_csv) {
    const PulseProblem problem = build_problem(c, m);
    OptimizationOutcome out{c.pulses, c.pulses, json::object()};
    out.report["backend"] = to_string(backend);
    out.report["available_backends"] = {to_string(Backend::trust_region), to_string(Backend::gradient_descent)};

    if (backend == Backend::trust_region) {
        const auto cfg = trust_region_config(c.optimizer);
        auto objective = [&](const Eigen::VectorXd& x) {
            const auto v = problem.evaluate_scaled(x);
            return optim::Evaluation{v.f, v.g};
        };
        auto projection = [&](const Eigen::VectorXd& x) { return problem.project_scaled(x); };
        const auto r = optim::minimize(objective, problem.scaled(c.pulses), cfg, projection);
        if (r.accepted_steps > 0) out.optimized = problem.params_from(r.state.x);
        out.report["termination"] = optim::to_string(r.termination);
        out.report["iterations"] = r.state.iteration;
        out.report["accepted_steps"] = r.accepted_steps;
        out.report["skipped_bfgs_updates"] = r.skipped_updates;
        out.report["final_objective"] = r.state.f;
        out.report["final_gradient_norm"] = r.state.g.norm();
        spdlog::info("trust region: {} after {} iterations, J = {:.6g}", optim::to_string(r.termination),
                     r.state.iteration, r.state.f);
        if (convergence_csv) {
            CsvWriter csv(*convergence_csv,
                          {"iteration", "f", "gradient_norm", "radius", "rho", "accepted", "step_norm"});
            csv.write(0, problem.value(c.pulses), problem.gradient(c.pulses).norm, cfg.initial_radius, 0.0, 1, 0.0);
            for (const auto& h : r.state.history)
                csv.write(h.iteration, h.f, h.gradient_norm, h.radius, h.rho, h.accepted ? 1 : 0, h.step_norm);
        }
    } else {
        const auto r = gradient_descent(problem, c.pulses, descent_config(c.optimizer));
        if (r.iterations > 0) out.optimized = r.params;
        out.report["converged"] = r.converged;
        out.report["iterations"] = r.iterations;
        out.report["final_objective"] = r.iterations > 0 ? r.final_objective : problem.value(c.pulses);
        spdlog::info("gradient descent: {} iterations, J = {:.6g}", r.iterations, r.final_objective);
        if (convergence_csv) {
            CsvWriter csv(*convergence_csv, {"iteration", "f", "gradient_norm", "step_size", "update_norm"});
            for (const auto& e : r.log) csv.write(e.iteration, e.objective, e.gradient_norm, e.step_size, e.update_norm);
        }
    }
    return out;
}

inline std::vector<std::string> scan_header(const ScanResult& r) {
    std::vector<std::string> h;
    for (Knob k : r.knobs) h.push_back(to_string(k));
    h.insert(h.end(), {"F_init", "F_opt", "I", "capped", "error"});
    return h;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

inline void write_scan(const std::filesystem::path& dir, const std::string& stem, const ScanResult& r,
                       const RunConfig& c, const GaussianParams& initial, const GaussianParams& optimized) {
    {
        std::ofstream f(dir / (stem + ".csv"));
        if (!f) throw ConfigError("cannot write scan output");
        f << std::setprecision(17);
        const auto header = scan_header(r);
        for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
        f << '\n';
        for (const auto& p : r.points) {
            for (double x : p.coordinates) f << x << ',';
            f << p.f_init << ',' << p.f_opt << ',';
            if (p.improvement) f << *p.improvement;
            f << ',' << (p.capped ? 1 : 0) << ',' << csv_field(p.error) << '\n';
        }
    }
    if (r.knobs.size() == 2) {
        CsvWriter csv(dir / (stem + "_long.csv"), {to_string(r.knobs[0]), to_string(r.knobs[1]), "quantity", "value"});
        for (const auto& p : r.points) {
            if (!p.error.empty()) continue;
            csv.write(p.coordinates[0], p.coordinates[1], "F_init", p.f_init);
            csv.write(p.coordinates[0], p.coordinates[1], "F_opt", p.f_opt);
            if (p.improvement) csv.write(p.coordinates[0], p.coordinates[1], "I", *p.improvement);
        }
    }
    json meta(r.metadata);
    meta["base_config_hash"] = config_hash(c);
    meta["protocols"] = {{"initial", stirap::detail::pulses_json(initial)},
                         {"optimized", stirap::detail::pulses_json(optimized)}};
    json axes = json::array();
    for (std::size_t i = 0; i < r.knobs.size(); ++i) axes.push_back({{"knob", to_string(r.knobs[i])}, {"values", r.axes[i]}});
    json points = json::array();
    for (const auto& p : r.points) {
        json jp{{"coordinates", p.coordinates}, {"F_init", p.f_init}, {"F_opt", p.f_opt}, {"capped", p.capped}};
        if (p.improvement) jp["I"] = *p.improvement;
        if (!p.error.empty()) jp["error"] = p.error;
        points.push_back(jp);
    }
    write_json(dir / (stem + ".json"), {{"metadata", meta}, {"axes", axes}, {"points", points}});
}

}  // namespace detail

inline int run_spectrum(const RunConfig& c, const Options& o) {
    const auto dir = detail::prepare_output(c, o);
    detail::write_config(dir, c);
    const Model m = build_model(c);
    if (!m.spectrum) throw ConfigError("spectrum needs a transmon model");
    const int n = m.spectrum->level_count();
    const double xi = expansion_parameter(*m.transmon);
    CsvWriter csv(dir / "spectrum.csv",
                  {"n", "E_n", "omega_n0", "omega_next", "anharmonicity", "detuning", "reference", "xi"});
    std::cout << std::setw(3) << "n" << std::setw(16) << "E_n" << std::setw(16) << "w_{n+1,n}" << std::setw(16)
              << "alpha_n" << std::setw(16) << "Delta_n" << '\n';
    for (int k = 0; k < n; ++k) {
        const double next = k + 1 < n ? m.spectrum->transition(k) : NAN;
        const double alpha = k + 2 < n ? m.spectrum->anharmonicity(k) : NAN;
        csv.write(k, m.spectrum->energy(k), m.spectrum->cumulative(k), next, alpha, m.frame->detunings[k],
                  m.frame->reference[k], xi);
        std::cout << std::setw(3) << k << std::setw(16) << m.spectrum->energy(k) << std::setw(16) << next
                  << std::setw(16) << alpha << std::setw(16) << m.frame->detunings[k] << '\n';
    }
    return kSuccess;
}

inline int run_simulate(const RunConfig& c, const Options& o) {
    const auto dir = detail::prepare_output(c, o);
    detail::write_config(dir, c);
    const Model m = build_model(c);
    const GaussianParams p = detail::params_source(c, o);
    validate(p);
    const json summary = detail::simulate_to(dir / "trajectory.csv", m, c, p);
    detail::write_json(dir / "summary.json", summary);
    spdlog::info("fidelity {:.6f}, max leakage {:.6f}", summary["fidelity"].get<double>(),
                 summary["max_leakage"].get<double>());
    return kSuccess;
}

inline int run_optimize(const RunConfig& c, const Options& o) {
    const auto dir = detail::prepare_output(c, o);
    detail::write_config(dir, c);
    const Model m = build_model(c);
    const Backend backend = o.backend ? *o.backend : c.optimizer.backend;
    auto outcome = detail::optimize(c, m, backend, dir / "convergence.csv");

    json before = detail::simulate_to(dir / "before.csv", m, c, outcome.initial);
    json after = detail::simulate_to(dir / "after.csv", m, c, outcome.optimized);
    json result = outcome.report;
    result["initial"] = before;
    result["optimized"] = after;
    result["params"] = stirap::detail::pulses_json(outcome.optimized);
    detail::write_json(dir / "optimized_params.json", result);
    spdlog::info("fidelity {:.6f} -> {:.6f}, max leakage {:.6f} -> {:.6f}", before["fidelity"].get<double>(),
                 after["fidelity"].get<double>(), before["max_leakage"].get<double>(),
                 after["max_leakage"].get<double>());
    return kSuccess;
}

inline int run_gradcheck(const RunConfig& c, const Options& o) {
    const auto dir = detail::prepare_output(c, o);
    detail::write_config(dir, c);
    const Model m = build_model(c);
    const GaussianParams p = detail::params_source(c, o);
    const CVector psi0 = basis_state(m.system.dimension(), 0);
    ParameterVector analytic = parameter_gradient(m.system, p, c.weights, m.grid, psi0).gradient;
    if (o.corrupt_gradient) analytic *= 1.001;
    const ParameterVector fd = finite_difference_gradient(m.system, p, c.weights, m.grid, psi0);
    const GradientCheck check = compare_gradients(analytic, fd);

    CsvWriter csv(dir / "gradcheck.csv", {"parameter", "analytic", "finite_difference", "abs_error", "rel_error", "pass"});
    for (int k = 0; k < kParamCount; ++k) {
        const auto& r = check.rows[k];
        csv.write(kParamNames[k], r.analytic, r.finite_difference, r.abs_error, r.rel_error, r.pass ? 1 : 0);
        spdlog::info("{:8s} analytic {: .10e}  fd {: .10e}  rel {:.2e}{}", kParamNames[k], r.analytic,
                     r.finite_difference, r.rel_error, r.pass ? "" : "  FAIL");
    }
    return check.pass ? kSuccess : kCheckFailure;
}

inline int run_scan(const RunConfig& c, const Options& o, int dimensions) {
    const auto dir = detail::prepare_output(c, o);
    detail::write_config(dir, c);
    const Model m = build_model(c);
    if (dimensions == 1 && !c.scans.scan1d) throw ConfigError("scan1d needs scans.scan1d in the config");
    if (dimensions == 2 && !c.scans.scan2d) throw ConfigError("scan2d needs scans.scan2d in the config");

    GaussianParams optimized;
    if (c.scans.optimized) {
        optimized = *c.scans.optimized;
    } else {
        spdlog::info("no optimized protocol in config; optimizing first");
        optimized = detail::optimize(c, m, o.backend ? *o.backend : c.optimizer.backend, std::nullopt).optimized;
    }
    const Scenario scenario = build_scenario(c, m);
    ScanResult r;
    if (dimensions == 1) {
        r = scan_1d(scenario, c.pulses, optimized, c.scans.scan1d->knob, c.scans.scan1d->values, o.workers);
    } else {
        const auto& [a, b] = *c.scans.scan2d;
        r = scan_2d(scenario, c.pulses, optimized, a.knob, a.values, b.knob, b.values, o.workers);
    }
    detail::write_scan(dir, dimensions == 1 ? "scan1d" : "scan2d", r, c, c.pulses, optimized);
    int failed = 0;
    for (const auto& p : r.points) failed += p.error.empty() ? 0 : 1;
    if (failed) spdlog::warn("{} of {} scan points failed", failed, r.points.size());
    return kSuccess;
}

/// Maps library errors onto process exit codes.
template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        spdlog::error("configuration error: {}", e.what());
        return kConfigFailure;
    } catch (const NumericalError& e) {
        spdlog::error("numerical failure: {}", e.what());
        return kNumericalFailure;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return kConfigFailure;
    }
}

inline int dispatch(const std::string& command, const std::string& config_path,
                    const std::vector<std::string>& overrides, const Options& o) {
    return guarded([&] {
        const RunConfig c = load_config(config_path, overrides);
        if (command == "spectrum") return run_spectrum(c, o);
        if (command == "simulate") return run_simulate(c, o);
        if (command == "optimize") return run_optimize(c, o);
        if (command == "gradcheck") return run_gradcheck(c, o);
        if (command == "scan1d") return run_scan(c, o, 1);
        if (command == "scan2d") return run_scan(c, o, 2);
        throw ConfigError("unknown command '" + command + "'");
    });
}

}  // namespace stirap::cli
