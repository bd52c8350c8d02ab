#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stirap/chain.hpp"
#include "stirap/common.hpp"

namespace stirap {

/// Transmon circuit parameters in angular-frequency units (rad/ns, hbar = 1).
struct TransmonSpec {
    double charging_energy = 0.0;   // E_C
    double josephson_energy = 0.0;  // E_J
    int level_count = 5;

    bool operator==(const TransmonSpec&) const = default;
};

/// Below this E_J/E_C the sixth-order expansion is still evaluated but the
/// transmon regime is questionable.
inline constexpr double kTransmonRegimeRatio = 20.0;

inline void validate(const TransmonSpec& spec) {
    if (!(spec.charging_energy > 0.0)) throw ConfigError("charging energy E_C must be positive");
    if (!(spec.josephson_energy > 0.0)) throw ConfigError("Josephson energy E_J must be positive");
    if (!(spec.josephson_energy > spec.charging_energy))
        throw ConfigError("E_J/E_C must exceed 1 for the transmon expansion");
    if (spec.level_count < 3) throw ConfigError("transmon model needs at least three levels");
}

inline bool in_transmon_regime(const TransmonSpec& spec) {
    return spec.josephson_energy / spec.charging_energy >= kTransmonRegimeRatio;
}

/// omega_0 = sqrt(8 E_J E_C)
inline double plasma_frequency(const TransmonSpec& spec) {
    validate(spec);
    return std::sqrt(8.0 * spec.josephson_energy * spec.charging_energy);
}

/// xi = sqrt(2 E_C / E_J)
inline double expansion_parameter(const TransmonSpec& spec) {
    validate(spec);
    return std::sqrt(2.0 * spec.charging_energy / spec.josephson_energy);
}

/// E_n = linear n + quadratic n^2 + cubic n^3 from the sixth-order expansion.
struct SpectrumCoefficients {
    double linear = 0.0;
    double quadratic = 0.0;
    double cubic = 0.0;
};

inline SpectrumCoefficients spectrum_coefficients(const TransmonSpec& spec) {
    const double ec = spec.charging_energy;
    const double xi = expansion_parameter(spec);
    return {plasma_frequency(spec) - ec / 2.0 + ec * xi / 9.0, ec * xi / 12.0 - ec / 2.0, ec * xi / 18.0};
}

/// Level energies relative to E_0, with transition and cumulative frequencies.
class LevelSpectrum {
public:
    LevelSpectrum() = default;

    static LevelSpectrum from_energies(std::vector<double> energies) {
        if (energies.size() < 2) throw ConfigError("spectrum needs at least two levels");
        const double e0 = energies.front();
        for (auto& e : energies) e -= e0;
        LevelSpectrum s;
        s.energies_ = std::move(energies);
        return s;
    }

    /// Builds energies from adjacent transitions omega_{n+1,n}.
    static LevelSpectrum from_transitions(std::span<const double> transitions) {
        std::vector<double> e(transitions.size() + 1, 0.0);
        for (std::size_t n = 0; n < transitions.size(); ++n) e[n + 1] = e[n] + transitions[n];
        return from_energies(std::move(e));
    }

    int level_count() const { return static_cast<int>(energies_.size()); }
    const std::vector<double>& energies() const { return energies_; }
    double energy(int n) const { return energies_.at(n); }

    /// omega_{n+1,n}
    double transition(int n) const { return energies_.at(n + 1) - energies_.at(n); }
    /// omega_{n0}
    double cumulative(int n) const { return energies_.at(n) - energies_.front(); }

    std::vector<double> transitions() const {
        std::vector<double> t;
        for (int n = 0; n + 1 < level_count(); ++n) t.push_back(transition(n));
        return t;
    }

    /// omega_{n+2,n+1} - omega_{n+1,n}
    double anharmonicity(int n = 0) const { return transition(n + 1) - transition(n); }

    bool strictly_decreasing_transitions() const {
        for (int n = 0; n + 2 < level_count(); ++n)
            if (!(transition(n + 1) < transition(n))) return false;
        return true;
    }

private:
    std::vector<double> energies_;
};

inline LevelSpectrum level_spectrum(const TransmonSpec& spec) {
    validate(spec);
    const auto c = spectrum_coefficients(spec);
    std::vector<double> e(spec.level_count);
    for (int n = 0; n < spec.level_count; ++n) {
        const double x = n;
        e[n] = c.linear * x + c.quadratic * x * x + c.cubic * x * x * x;
    }
    return LevelSpectrum::from_energies(std::move(e));
}

struct ZeroPointFluctuations {
    double phase = 0.0;   // phi_zpf = (2 E_C / E_J)^{1/4}
    double number = 0.0;  // n_zpf = (E_J / (32 E_C))^{1/4}
};

inline ZeroPointFluctuations zpf_amplitudes(const TransmonSpec& spec) {
    validate(spec);
    return {std::pow(2.0 * spec.charging_energy / spec.josephson_energy, 0.25),
            std::pow(spec.josephson_energy / (32.0 * spec.charging_energy), 0.25)};
}

struct DriveTones {
    double pump_frequency = 0.0;
    double stokes_frequency = 0.0;
    double pump_phase = 0.0;
    double stokes_phase = 0.0;

    double frequency(Channel ch) const { return ch == Channel::pump ? pump_frequency : stokes_frequency; }
    double phase(Channel ch) const { return ch == Channel::pump ? pump_phase : stokes_phase; }

    bool operator==(const DriveTones&) const = default;
};

/// Pump on omega_10 and Stokes on omega_21: Delta_1 = Delta_2 = 0.
inline DriveTones resonant_tones(const LevelSpectrum& spectrum, double pump_phase = 0.0,
                                 double stokes_phase = 0.0) {
    if (spectrum.level_count() < 3) throw ConfigError("resonant tones need at least three levels");
    return {spectrum.transition(0), spectrum.transition(1), pump_phase, stokes_phase};
}

using ChannelMap = std::vector<Channel>;

/// Link j (levels j, j+1) -> drive channel. The (p, s, p, s) map is only
/// implied for the five-level truncation.
inline ChannelMap resolve_channel_map(int level_count, const std::optional<ChannelMap>& explicit_map) {
    if (explicit_map) {
        if (static_cast<int>(explicit_map->size()) != level_count - 1)
            throw ConfigError("channel map must list " + std::to_string(level_count - 1) + " links");
        return *explicit_map;
    }
    if (level_count != 5)
        throw ConfigError("N = " + std::to_string(level_count) +
                          " requires an explicit channel map (default map is for N = 5)");
    return {Channel::pump, Channel::stokes, Channel::pump, Channel::stokes};
}

struct FrameSpec {
    DriveTones tones;
    ChannelMap channels;
    std::vector<double> reference;  // nu_n
    std::vector<double> detunings;  // Delta_n = omega_{n0} - nu_n
};

/// Rotating frame with cumulative reference frequencies
/// nu_n = nu_{n-1} + omega_{ch(n-1)}; for the default map this is
/// (0, w_p, w_p + w_s, 2w_p + w_s, 2w_p + 2w_s).
inline FrameSpec build_frame(const LevelSpectrum& spectrum, const DriveTones& tones,
                             const std::optional<ChannelMap>& channel_map = std::nullopt) {
    if (!std::isfinite(tones.pump_frequency) || !std::isfinite(tones.stokes_frequency))
        throw ConfigError("drive frequencies must be finite");
    const int n = spectrum.level_count();
    FrameSpec f{tones, resolve_channel_map(n, channel_map), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (int j = 1; j < n; ++j) f.reference[j] = f.reference[j - 1] + tones.frequency(f.channels[j - 1]);
    for (int j = 0; j < n; ++j) f.detunings[j] = spectrum.cumulative(j) - f.reference[j];
    return f;
}

/// delta = omega_20 - (omega_p + omega_s)
inline double two_photon_detuning(const LevelSpectrum& spectrum, const DriveTones& tones) {
    return spectrum.cumulative(2) - (tones.pump_frequency + tones.stokes_frequency);
}

/// Chain with couplings sqrt(j) * Omega_ch(j) e^{i phi_ch(j)} on link (j-1, j)
/// and collapse operators sqrt(gamma_n) |n-1><n|.
inline ChainSystem chain_from_frame(const FrameSpec& frame, std::span<const double> decay_rates) {
    const int n = static_cast<int>(frame.detunings.size());
    if (static_cast<int>(decay_rates.size()) != n)
        throw ConfigError("decay_rates must have one entry per level (" + std::to_string(n) + ")");
    if (decay_rates[0] != 0.0) throw ConfigError("ground state cannot decay (gamma_0 must be 0)");

    ChainSystem sys;
    sys.detunings = frame.detunings;
    for (int j = 0; j + 1 < n; ++j) {
        const Channel ch = frame.channels[j];
        sys.links.push_back({j, ch, std::sqrt(static_cast<double>(j + 1)), frame.tones.phase(ch)});
    }
    for (int j = 1; j < n; ++j) {
        if (decay_rates[j] < 0.0) throw ConfigError("decay rates must be non-negative");
        if (decay_rates[j] > 0.0) sys.decays.push_back({decay_rates[j], j, j - 1});
    }
    validate(sys);
    return sys;
}

inline ChainSystem chain_from_transmon(const TransmonSpec& spec, const FrameSpec& frame,
                                       std::span<const double> decay_rates) {
    validate(spec);
    if (static_cast<int>(frame.detunings.size()) != spec.level_count)
        throw ConfigError("frame was built for a different level count");
    return chain_from_frame(frame, decay_rates);
}

}  // namespace stirap
