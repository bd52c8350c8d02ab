#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "stirap/chain.hpp"
#include "stirap/common.hpp"
#include "stirap/dynamics.hpp"
#include "stirap/grid.hpp"
#include "stirap/pulses.hpp"
#include "stirap/transmon.hpp"

namespace stirap {

enum class Knob {
    amplitude_scale,      // eta_Omega
    anharmonicity_scale,  // eta_alpha
    raman_bias,           // delta
    drive_shift,          // delta omega_d
    transition_drift,     // delta omega
    time_scale,           // eta_t
    shift_32,             // delta omega_32
    shift_43,             // delta omega_43
};

inline constexpr std::array<Knob, 8> kAllKnobs = {
    Knob::amplitude_scale, Knob::anharmonicity_scale, Knob::raman_bias, Knob::drive_shift,
    Knob::transition_drift, Knob::time_scale, Knob::shift_32, Knob::shift_43};

inline std::string to_string(Knob k) {
    switch (k) {
        case Knob::amplitude_scale: return "eta_omega";
        case Knob::anharmonicity_scale: return "eta_alpha";
        case Knob::raman_bias: return "raman_bias";
        case Knob::drive_shift: return "drive_shift";
        case Knob::transition_drift: return "transition_drift";
        case Knob::time_scale: return "eta_t";
        case Knob::shift_32: return "shift_32";
        case Knob::shift_43: return "shift_43";
    }
    return "unknown";
}

inline Knob knob_from_string(const std::string& name) {
    for (Knob k : kAllKnobs)
        if (to_string(k) == name) return k;
    throw ConfigError("unknown perturbation knob '" + name + "'");
}

inline double nominal_value(Knob k) {
    return (k == Knob::amplitude_scale || k == Knob::anharmonicity_scale || k == Knob::time_scale) ? 1.0 : 0.0;
}

inline bool acts_on_spectrum_or_tones(Knob k) {
    return k != Knob::amplitude_scale && k != Knob::time_scale;
}

struct KnobSetting {
    Knob knob = Knob::amplitude_scale;
    double value = 1.0;
};

/// Settings are applied in order.
struct PerturbationSpec {
    std::vector<KnobSetting> settings;
};

/// Everything needed to rebuild the chain under a perturbation. Frequency
/// knobs need a level spectrum; direct chain models only admit the pulse
/// scalings.
struct Scenario {
    std::optional<LevelSpectrum> spectrum;
    DriveTones tones;
    std::optional<ChannelMap> channel_map;
    std::vector<double> decay_rates;
    std::optional<ChainSystem> direct_chain;
    TimeGrid grid;
    int target_level = 2;
};

struct PerturbedModel {
    ChainSystem system;
    GaussianParams params;
    TimeGrid grid;
    std::optional<FrameSpec> frame;
};

inline ChainSystem scenario_chain(const Scenario& s) {
    if (s.direct_chain) return *s.direct_chain;
    if (!s.spectrum) throw ConfigError("scenario has neither a spectrum nor a chain");
    return chain_from_frame(build_frame(*s.spectrum, s.tones, s.channel_map), s.decay_rates);
}

/// Raman bias shifts omega_s by -delta (Delta_2 += delta, Delta_1 fixed);
/// eta_alpha scales omega_{n+1,n} - omega_10 with omega_10 fixed; the common
/// drift adds delta omega to every adjacent transition.
inline PerturbedModel apply_perturbation(const Scenario& base, const GaussianParams& params,
                                         const PerturbationSpec& spec) {
    PerturbedModel out{{}, params, base.grid, std::nullopt};
    DriveTones tones = base.tones;
    std::vector<double> transitions = base.spectrum ? base.spectrum->transitions() : std::vector<double>{};
    bool rebuilt = false;

    for (const auto& [knob, value] : spec.settings) {
        if (!std::isfinite(value)) throw ConfigError("perturbation values must be finite");
        if (acts_on_spectrum_or_tones(knob) && !base.spectrum)
            throw ConfigError("knob '" + to_string(knob) + "' needs a transmon spectrum");
        if (value == nominal_value(knob)) continue;
        switch (knob) {
            case Knob::amplitude_scale:
                out.params = apply_amplitude_scaling(out.params, value);
                break;
            case Knob::time_scale: {
                out.params = apply_time_scaling(out.params, value);
                const int steps = std::max(2, static_cast<int>(std::lround(value * out.grid.steps)));
                out.grid = TimeGrid(value * out.grid.duration, steps);
                break;
            }
            case Knob::raman_bias:
                tones.stokes_frequency -= value;
                rebuilt = true;
                break;
            case Knob::drive_shift:
                tones.pump_frequency += value;
                tones.stokes_frequency += value;
                rebuilt = true;
                break;
            case Knob::transition_drift:
                for (auto& w : transitions) w += value;
                rebuilt = true;
                break;
            case Knob::anharmonicity_scale: {
                if (value < 0.0) throw ConfigError("anharmonicity scale must be non-negative");
                const double w10 = transitions.at(0);
                for (auto& w : transitions) w = w10 + value * (w - w10);
                rebuilt = true;
                break;
            }
            case Knob::shift_32:
            case Knob::shift_43: {
                const std::size_t n = knob == Knob::shift_32 ? 2 : 3;
                if (transitions.size() <= n)
                    throw ConfigError("knob '" + to_string(knob) + "' needs more levels");
                transitions[n] += value;
                rebuilt = true;
                break;
            }
        }
    }

    if (base.spectrum) {
        const LevelSpectrum spectrum = rebuilt ? LevelSpectrum::from_transitions(transitions) : *base.spectrum;
        out.frame = build_frame(spectrum, tones, base.channel_map);
        out.system = chain_from_frame(*out.frame, base.decay_rates);
    } else {
        out.system = scenario_chain(base);
    }
    return out;
}

struct Improvement {
    double value = 1.0;
    bool capped = false;
};

inline constexpr double kImprovementFloor = 1e-12;

/// I = (1 - F_init) / (1 - F_opt); the denominator is floored at 1e-12 and
/// such points are flagged.
inline Improvement improvement_factor(double f_init, double f_opt) {
    constexpr double slack = 1e-9;
    if (!(f_init >= -slack && f_init <= 1.0 + slack) || !(f_opt >= -slack && f_opt <= 1.0 + slack))
        throw ConfigError("fidelities must lie in [0, 1]");
    const double denom = 1.0 - f_opt;
    if (denom < kImprovementFloor) return {(1.0 - f_init) / kImprovementFloor, true};
    return {(1.0 - f_init) / denom, false};
}

/// Final |<m|psi(T)>|^2 from |0> for one protocol in a perturbed model.
inline double transfer_fidelity(const PerturbedModel& model, int target_level) {
    const Trajectory traj = propagate(model.system, model.params, model.grid, basis_state(model.system.dimension(), 0));
    return std::norm(traj.final_state()(target_level));
}

/// Width of the window where max(Omega_p, Omega_s) >= threshold * max(A),
/// clipped to [0, T].
inline double effective_duration(const GaussianParams& p, double duration, double threshold = 1e-3) {
    const double peak = std::max(p.amplitude[0], p.amplitude[1]);
    if (!(peak > 0.0)) return 0.0;
    const double level = threshold * peak;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < kChannelCount; ++c) {
        if (p.amplitude[c] < level) continue;
        const double half = p.width[c] * std::sqrt(2.0 * std::log(p.amplitude[c] / level));
        lo = std::min(lo, p.center[c] - half);
        hi = std::max(hi, p.center[c] + half);
    }
    lo = std::max(lo, 0.0);
    hi = std::min(hi, duration);
    return hi > lo ? hi - lo : 0.0;
}

struct ScanPoint {
    std::vector<double> coordinates;
    double f_init = 0.0;
    double f_opt = 0.0;
    std::optional<double> improvement;  // empty where 1 - F_opt is below the floor
    bool capped = false;
    std::string error;  // non-empty when the point failed to evaluate
};

struct ScanResult {
    std::vector<Knob> knobs;
    std::vector<std::vector<double>> axes;
    std::vector<ScanPoint> points;  // row-major over axes
    std::map<std::string, std::string> metadata;
};

namespace detail {

/// Evaluates fn(i) for i in [0, count) on up to `workers` threads. Results
/// are written by index, so ordering does not depend on scheduling.
template <typename F>
void parallel_for(std::size_t count, int workers, F&& fn) {
    const std::size_t n_threads = std::clamp<std::size_t>(workers < 1 ? 1 : workers, 1, std::max<std::size_t>(count, 1));
    if (n_threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline ScanPoint evaluate_point(const Scenario& base, const GaussianParams& initial, const GaussianParams& optimized,
                                const PerturbationSpec& spec) {
    ScanPoint pt;
    for (const auto& s : spec.settings) pt.coordinates.push_back(s.value);
    try {
        pt.f_init = transfer_fidelity(apply_perturbation(base, initial, spec), base.target_level);
        pt.f_opt = transfer_fidelity(apply_perturbation(base, optimized, spec), base.target_level);
        const Improvement imp = improvement_factor(pt.f_init, pt.f_opt);
        pt.capped = imp.capped;
        if (!imp.capped) pt.improvement = imp.value;
    } catch (const Error& e) {
        pt.error = e.what();
    }
    return pt;
}

inline void fill_metadata(ScanResult& r) {
    for (Knob k : kAllKnobs) {
        const bool scanned = std::find(r.knobs.begin(), r.knobs.end(), k) != r.knobs.end();
        if (!scanned) r.metadata["fixed." + to_string(k)] = format_double(nominal_value(k));
    }
    r.metadata["raman_bias_realization"] = "stokes_frequency -= delta";
    r.metadata["anharmonicity_realization"] = "omega_{n+1,n} = omega_10 + eta_alpha (omega_{n+1,n} - omega_10)";
    r.metadata["transition_drift_realization"] = "omega_{n+1,n} += delta_omega";
    r.metadata["improvement_floor"] = format_double(kImprovementFloor);
}

}  // namespace detail

inline ScanResult scan_1d(const Scenario& base, const GaussianParams& initial, const GaussianParams& optimized,
                          Knob knob, const std::vector<double>& values, int workers = 1) {
    if (values.empty()) throw ConfigError("scan needs at least one value");
    ScanResult r{{knob}, {values}, std::vector<ScanPoint>(values.size()), {}};
    detail::parallel_for(values.size(), workers, [&](std::size_t i) {
        r.points[i] = detail::evaluate_point(base, initial, optimized, {{{knob, values[i]}}});
    });
    detail::fill_metadata(r);
    return r;
}

/// Cartesian product, first knob varying slowest.
inline ScanResult scan_2d(const Scenario& base, const GaussianParams& initial, const GaussianParams& optimized,
                          Knob first, const std::vector<double>& first_values, Knob second,
                          const std::vector<double>& second_values, int workers = 1) {
    if (first_values.empty() || second_values.empty()) throw ConfigError("scan grids must be non-empty");
    if (first == second) throw ConfigError("2D scan needs two distinct knobs");
    const std::size_t cols = second_values.size();
    ScanResult r{{first, second}, {first_values, second_values},
                 std::vector<ScanPoint>(first_values.size() * cols), {}};
    detail::parallel_for(r.points.size(), workers, [&](std::size_t i) {
        const PerturbationSpec spec{{{first, first_values[i / cols]}, {second, second_values[i % cols]}}};
        r.points[i] = detail::evaluate_point(base, initial, optimized, spec);
    });
    detail::fill_metadata(r);
    return r;
}

}  // namespace stirap
