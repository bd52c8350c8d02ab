#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "stirap/chain.hpp"
#include "stirap/common.hpp"
#include "stirap/dynamics.hpp"
#include "stirap/optimizer.hpp"
#include "stirap/pmp.hpp"
#include "stirap/pulses.hpp"
#include "stirap/robustness.hpp"
#include "stirap/transmon.hpp"

namespace stirap {

using json = nlohmann::json;

struct FrameConfig {
    bool resonant = true;
    double pump_frequency = 0.0;  // ignored when resonant
    double stokes_frequency = 0.0;
    double pump_phase = 0.0;
    double stokes_phase = 0.0;

    bool operator==(const FrameConfig&) const = default;
};

struct GridConfig {
    double duration = 80.0;
    std::optional<int> steps;  // empty: resolution rule
    ResolutionRule rule;

    bool operator==(const GridConfig& o) const {
        return duration == o.duration && steps == o.steps && rule.samples_per_width == o.rule.samples_per_width &&
               rule.phase_per_step == o.rule.phase_per_step;
    }
};

enum class Backend { trust_region, gradient_descent };

inline std::string to_string(Backend b) {
    return b == Backend::trust_region ? "trust-region" : "gradient-descent";
}

inline Backend backend_from_string(const std::string& s) {
    if (s == "trust-region") return Backend::trust_region;
    if (s == "gradient-descent") return Backend::gradient_descent;
    throw ConfigError("unknown backend '" + s + "' (expected trust-region or gradient-descent)");
}

struct OptimizerConfig {
    Backend backend = Backend::trust_region;
    double min_width = 0.5;
    double initial_radius = 0.1;
    double max_radius = 1.0;
    double eta = 0.1;
    double gradient_tolerance = 1e-8;
    int max_iterations = 200;
    std::vector<double> descent_steps{0.01};
    double descent_tolerance = 1e-8;
    int descent_max_iterations = 100;

    bool operator==(const OptimizerConfig&) const = default;
};

struct ScanAxis {
    Knob knob = Knob::amplitude_scale;
    std::vector<double> values;

    bool operator==(const ScanAxis&) const = default;
};

struct ScanConfig {
    std::optional<ScanAxis> scan1d;
    std::optional<std::pair<ScanAxis, ScanAxis>> scan2d;
    // optimised protocol for scans; when empty the scan optimises first
    std::optional<GaussianParams> optimized;

    bool operator==(const ScanConfig&) const = default;
};

struct RunConfig {
    std::variant<TransmonSpec, ChainSystem> model;
    FrameConfig frame;
    std::optional<ChannelMap> channel_map;
    std::vector<double> decay_rates;  // transmon models only
    CostWeights weights;
    GaussianParams pulses;
    GridConfig grid;
    OptimizerConfig optimizer;
    ScanConfig scans;
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <typename T>
T optional_or(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

inline std::vector<double> axis_values(const json& j, const std::string& where) {
    if (j.contains("values")) return required<std::vector<double>>(j, "values", where);
    const double start = required<double>(j, "start", where);
    const double stop = required<double>(j, "stop", where);
    const int count = required<int>(j, "count", where);
    if (count < 1) throw ConfigError(where + ".count must be >= 1");
    std::vector<double> v(count, start);
    for (int i = 1; i < count; ++i) v[i] = start + (stop - start) * i / (count - 1);
    return v;
}

inline ScanAxis parse_axis(const json& j, const std::string& where) {
    ScanAxis a{knob_from_string(required<std::string>(j, "knob", where)), axis_values(j, where)};
    if (a.values.empty()) throw ConfigError(where + ": scan values must be non-empty");
    return a;
}

inline json axis_json(const ScanAxis& a) { return {{"knob", to_string(a.knob)}, {"values", a.values}}; }

inline json pulses_json(const GaussianParams& p) {
    json j;
    const ParameterVector u = p.to_vector();
    for (int k = 0; k < kParamCount; ++k) j[std::string(kParamNames[k])] = u(k);
    return j;
}

inline GaussianParams parse_pulses(const json& j, const std::string& where) {
    ParameterVector u;
    for (int k = 0; k < kParamCount; ++k) u(k) = required<double>(j, std::string(kParamNames[k]).c_str(), where);
    return GaussianParams::from_vector(u);
}

inline ChannelMap parse_channel_map(const json& j) {
    ChannelMap m;
    for (const auto& e : j) {
        try {
            m.push_back(channel_from_string(e.get<std::string>()));
        } catch (const json::exception& ex) {
            throw ConfigError(std::string("channel_map: ") + ex.what());
        }
    }
    return m;
}

inline ChainSystem parse_chain(const json& j) {
    ChainSystem sys;
    sys.detunings = required<std::vector<double>>(j, "detunings", "model.chain");
    for (const auto& l : required<json>(j, "links", "model.chain"))
        sys.links.push_back({required<int>(l, "lower", "model.chain.links"),
                             channel_from_string(required<std::string>(l, "channel", "model.chain.links")),
                             optional_or<double>(l, "scale", 1.0, "model.chain.links"),
                             optional_or<double>(l, "phase", 0.0, "model.chain.links")});
    if (j.contains("decays"))
        for (const auto& d : j.at("decays"))
            sys.decays.push_back({required<double>(d, "rate", "model.chain.decays"),
                                  required<int>(d, "from", "model.chain.decays"),
                                  required<int>(d, "to", "model.chain.decays")});
    return sys;
}

inline json chain_json(const ChainSystem& sys) {
    json links = json::array(), decays = json::array();
    for (const auto& l : sys.links)
        links.push_back({{"lower", l.lower}, {"channel", std::string(to_string(l.channel))}, {"scale", l.scale}, {"phase", l.phase}});
    for (const auto& d : sys.decays) decays.push_back({{"rate", d.rate}, {"from", d.from}, {"to", d.to}});
    return {{"detunings", sys.detunings}, {"links", links}, {"decays", decays}};
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
    using namespace detail;
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    RunConfig c;

    const json model = required<json>(j, "model", "config");
    if (model.contains("transmon") == model.contains("chain"))
        throw ConfigError("model must contain exactly one of 'transmon' or 'chain'");
    if (model.contains("transmon")) {
        const json& t = model.at("transmon");
        c.model = TransmonSpec{required<double>(t, "charging_energy", "model.transmon"),
                               required<double>(t, "josephson_energy", "model.transmon"),
                               optional_or<int>(t, "level_count", 5, "model.transmon")};
    } else {
        c.model = parse_chain(model.at("chain"));
    }

    if (j.contains("frame")) {
        const json& f = j.at("frame");
        const auto mode = optional_or<std::string>(f, "mode", "resonant", "frame");
        if (mode != "resonant" && mode != "explicit") throw ConfigError("frame.mode must be resonant or explicit");
        c.frame.resonant = mode == "resonant";
        if (!c.frame.resonant) {
            c.frame.pump_frequency = required<double>(f, "pump_frequency", "frame");
            c.frame.stokes_frequency = required<double>(f, "stokes_frequency", "frame");
        }
        c.frame.pump_phase = optional_or<double>(f, "pump_phase", 0.0, "frame");
        c.frame.stokes_phase = optional_or<double>(f, "stokes_phase", 0.0, "frame");
    }
    if (j.contains("channel_map") && !j.at("channel_map").is_null()) c.channel_map = parse_channel_map(j.at("channel_map"));
    c.decay_rates = optional_or<std::vector<double>>(j, "decay_rates", {}, "config");

    if (j.contains("weights")) {
        const json& w = j.at("weights");
        c.weights.terminal = optional_or<double>(w, "terminal", c.weights.terminal, "weights");
        c.weights.intermediate = optional_or<double>(w, "intermediate", c.weights.intermediate, "weights");
        c.weights.leakage = optional_or<double>(w, "leakage", c.weights.leakage, "weights");
        c.weights.penalized_levels =
            optional_or<std::vector<int>>(w, "penalized_levels", c.weights.penalized_levels, "weights");
        c.weights.target_level = optional_or<int>(w, "target_level", c.weights.target_level, "weights");
    }

    c.pulses = parse_pulses(required<json>(j, "pulses", "config"), "pulses");

    if (j.contains("grid")) {
        const json& g = j.at("grid");
        c.grid.duration = optional_or<double>(g, "duration", c.grid.duration, "grid");
        if (g.contains("steps") && !(g.at("steps").is_string() && g.at("steps") == "auto"))
            c.grid.steps = required<int>(g, "steps", "grid");
        c.grid.rule.samples_per_width = optional_or<double>(g, "samples_per_width", 50.0, "grid");
        c.grid.rule.phase_per_step = optional_or<double>(g, "phase_per_step", 0.05, "grid");
    }

    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        auto& oc = c.optimizer;
        oc.backend = backend_from_string(optional_or<std::string>(o, "backend", to_string(oc.backend), "optimizer"));
        oc.min_width = optional_or<double>(o, "min_width", oc.min_width, "optimizer");
        oc.initial_radius = optional_or<double>(o, "initial_radius", oc.initial_radius, "optimizer");
        oc.max_radius = optional_or<double>(o, "max_radius", oc.max_radius, "optimizer");
        oc.eta = optional_or<double>(o, "eta", oc.eta, "optimizer");
        oc.gradient_tolerance = optional_or<double>(o, "gradient_tolerance", oc.gradient_tolerance, "optimizer");
        oc.max_iterations = optional_or<int>(o, "max_iterations", oc.max_iterations, "optimizer");
        oc.descent_steps = optional_or<std::vector<double>>(o, "descent_steps", oc.descent_steps, "optimizer");
        oc.descent_tolerance = optional_or<double>(o, "descent_tolerance", oc.descent_tolerance, "optimizer");
        oc.descent_max_iterations =
            optional_or<int>(o, "descent_max_iterations", oc.descent_max_iterations, "optimizer");
    }

    if (j.contains("scans")) {
        const json& s = j.at("scans");
        if (s.contains("scan1d") && !s.at("scan1d").is_null()) c.scans.scan1d = parse_axis(s.at("scan1d"), "scans.scan1d");
        if (s.contains("scan2d") && !s.at("scan2d").is_null()) {
            const json& s2 = s.at("scan2d");
            c.scans.scan2d = std::make_pair(parse_axis(required<json>(s2, "first", "scans.scan2d"), "scans.scan2d.first"),
                                            parse_axis(required<json>(s2, "second", "scans.scan2d"), "scans.scan2d.second"));
        }
        if (s.contains("optimized") && !s.at("optimized").is_null())
            c.scans.optimized = parse_pulses(s.at("optimized"), "scans.optimized");
    }

    c.output_dir = optional_or<std::string>(j, "output_dir", c.output_dir, "config");
    c.seed = optional_or<std::uint64_t>(j, "seed", c.seed, "config");
    return c;
}

inline json to_json(const RunConfig& c) {
    using namespace detail;
    json j;
    if (const auto* t = std::get_if<TransmonSpec>(&c.model))
        j["model"] = {{"transmon",
                       {{"charging_energy", t->charging_energy},
                        {"josephson_energy", t->josephson_energy},
                        {"level_count", t->level_count}}}};
    else
        j["model"] = {{"chain", chain_json(std::get<ChainSystem>(c.model))}};

    j["frame"] = {{"mode", c.frame.resonant ? "resonant" : "explicit"},
                  {"pump_phase", c.frame.pump_phase},
                  {"stokes_phase", c.frame.stokes_phase}};
    if (!c.frame.resonant) {
        j["frame"]["pump_frequency"] = c.frame.pump_frequency;
        j["frame"]["stokes_frequency"] = c.frame.stokes_frequency;
    }
    if (c.channel_map) {
        json m = json::array();
        for (Channel ch : *c.channel_map) m.push_back(std::string(to_string(ch)));
        j["channel_map"] = m;
    }
    j["decay_rates"] = c.decay_rates;
    j["weights"] = {{"terminal", c.weights.terminal},
                    {"intermediate", c.weights.intermediate},
                    {"leakage", c.weights.leakage},
                    {"penalized_levels", c.weights.penalized_levels},
                    {"target_level", c.weights.target_level}};
    j["pulses"] = pulses_json(c.pulses);
    j["grid"] = {{"duration", c.grid.duration},
                 {"samples_per_width", c.grid.rule.samples_per_width},
                 {"phase_per_step", c.grid.rule.phase_per_step}};
    if (c.grid.steps)
        j["grid"]["steps"] = *c.grid.steps;
    else
        j["grid"]["steps"] = "auto";

    const auto& o = c.optimizer;
    j["optimizer"] = {{"backend", to_string(o.backend)},
                      {"min_width", o.min_width},
                      {"initial_radius", o.initial_radius},
                      {"max_radius", o.max_radius},
                      {"eta", o.eta},
                      {"gradient_tolerance", o.gradient_tolerance},
                      {"max_iterations", o.max_iterations},
                      {"descent_steps", o.descent_steps},
                      {"descent_tolerance", o.descent_tolerance},
                      {"descent_max_iterations", o.descent_max_iterations}};

    json scans = json::object();
    if (c.scans.scan1d) scans["scan1d"] = axis_json(*c.scans.scan1d);
    if (c.scans.scan2d)
        scans["scan2d"] = {{"first", axis_json(c.scans.scan2d->first)}, {"second", axis_json(c.scans.scan2d->second)}};
    if (c.scans.optimized) scans["optimized"] = pulses_json(*c.scans.optimized);
    j["scans"] = scans;
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    return j;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
}

/// key=value with a dotted key ("grid.duration=60"). The value is parsed as
/// JSON when possible and taken as a plain string otherwise.
inline void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    std::string pointer;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        pointer += "/" + key.substr(start, dot - start);
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    try {
        j[json::json_pointer(pointer)] = value;
    } catch (const json::exception& e) {
        throw ConfigError("cannot apply override '" + assignment + "': " + e.what());
    }
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    json j = read_json_file(path);
    for (const auto& o : overrides) apply_override(j, o);
    return parse_config(j);
}

/// FNV-1a over the canonical dump; identifies the base configuration in
/// scan metadata.
inline std::string config_hash(const RunConfig& c) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : to_json(c).dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Physical model assembled from a RunConfig.
struct Model {
    ChainSystem system;
    std::optional<TransmonSpec> transmon;
    std::optional<LevelSpectrum> spectrum;
    std::optional<FrameSpec> frame;
    TimeGrid grid;
};

inline DriveTones config_tones(const RunConfig& c, const LevelSpectrum& spectrum) {
    if (c.frame.resonant) return resonant_tones(spectrum, c.frame.pump_phase, c.frame.stokes_phase);
    return {c.frame.pump_frequency, c.frame.stokes_frequency, c.frame.pump_phase, c.frame.stokes_phase};
}

inline TimeGrid config_grid(const RunConfig& c, const ChainSystem& sys) {
    const int steps = c.grid.steps ? *c.grid.steps : auto_steps(sys, c.pulses, c.grid.duration, c.grid.rule);
    TimeGrid g(c.grid.duration, steps);
    g.validate();
    return g;
}

inline Model build_model(const RunConfig& c) {
    Model m;
    if (const auto* t = std::get_if<TransmonSpec>(&c.model)) {
        m.transmon = *t;
        m.spectrum = level_spectrum(*t);
        m.frame = build_frame(*m.spectrum, config_tones(c, *m.spectrum), c.channel_map);
        m.system = chain_from_transmon(*t, *m.frame, c.decay_rates);
    } else {
        if (!c.decay_rates.empty()) throw ConfigError("decay_rates apply to transmon models; use model.chain.decays");
        m.system = std::get<ChainSystem>(c.model);
        validate(m.system);
    }
    validate(c.weights, m.system.dimension());
    validate(c.pulses);
    m.grid = config_grid(c, m.system);
    return m;
}

inline Scenario build_scenario(const RunConfig& c, const Model& m) {
    Scenario s;
    s.grid = m.grid;
    s.target_level = c.weights.target_level;
    if (m.spectrum) {
        s.spectrum = m.spectrum;
        s.tones = m.frame->tones;
        s.channel_map = c.channel_map;
        s.decay_rates = c.decay_rates;
    } else {
        s.direct_chain = m.system;
    }
    return s;
}

inline PulseProblem build_problem(const RunConfig& c, const Model& m) {
    return PulseProblem::make(m.system, c.weights, m.grid, c.optimizer.min_width);
}

inline optim::TrustRegionConfig trust_region_config(const OptimizerConfig& o) {
    optim::TrustRegionConfig t;
    t.initial_radius = o.initial_radius;
    t.max_radius = o.max_radius;
    t.eta = o.eta;
    t.gradient_tolerance = o.gradient_tolerance;
    t.max_iterations = o.max_iterations;
    return t;
}

inline DescentConfig descent_config(const OptimizerConfig& o) {
    DescentConfig d;
    d.step_sizes = o.descent_steps;
    d.tolerance = o.descent_tolerance;
    d.max_iterations = o.descent_max_iterations;
    return d;
}

}  // namespace stirap
