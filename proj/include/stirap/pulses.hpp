#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>
#include <vector>

#include "stirap/common.hpp"
#include "stirap/grid.hpp"

namespace stirap {

inline constexpr int kParamCount = 6;
using ParameterVector = Eigen::Matrix<double, kParamCount, 1>;

/// Ordering of the control vector u = (A_p, A_s, t0_p, t0_s, sigma_p, sigma_s).
inline constexpr std::array<std::string_view, kParamCount> kParamNames = {"A_p",  "A_s",     "t0_p",
                                                                           "t0_s", "sigma_p", "sigma_s"};

/// Gaussian pump/Stokes envelopes A exp(-(t - t0)^2 / (2 sigma^2)).
/// Each array is indexed by channel (pump, stokes).
struct GaussianParams {
    std::array<double, kChannelCount> amplitude{0.0, 0.0};  // rad/ns
    std::array<double, kChannelCount> center{0.0, 0.0};     // ns
    std::array<double, kChannelCount> width{1.0, 1.0};      // ns

    static constexpr int amplitude_index(Channel ch) { return index(ch); }
    static constexpr int center_index(Channel ch) { return 2 + index(ch); }
    static constexpr int width_index(Channel ch) { return 4 + index(ch); }

    ParameterVector to_vector() const {
        ParameterVector u;
        u << amplitude[0], amplitude[1], center[0], center[1], width[0], width[1];
        return u;
    }

    static GaussianParams from_vector(const ParameterVector& u) {
        return {{u(0), u(1)}, {u(2), u(3)}, {u(4), u(5)}};
    }

    bool operator==(const GaussianParams&) const = default;
};

inline void validate(const GaussianParams& p) {
    for (int c = 0; c < kChannelCount; ++c) {
        if (!(p.width[c] > 0.0)) throw ConfigError("pulse widths must be positive");
        if (!(p.amplitude[c] >= 0.0)) throw ConfigError("pulse amplitudes must be non-negative");
        if (!std::isfinite(p.center[c])) throw ConfigError("pulse centers must be finite");
    }
}

inline double gaussian_shape(const GaussianParams& p, Channel ch, double t) {
    const int c = index(ch);
    const double x = (t - p.center[c]) / p.width[c];
    return std::exp(-0.5 * x * x);
}

inline double envelope(const GaussianParams& p, Channel ch, double t) {
    return p.amplitude[index(ch)] * gaussian_shape(p, ch, t);
}

struct EnvelopeDerivatives {
    double amplitude = 0.0;
    double center = 0.0;
    double width = 0.0;
};

/// Analytic dOmega/dA, dOmega/dt0, dOmega/dsigma. dOmega/dA is the bare
/// Gaussian so it stays defined at A = 0.
inline EnvelopeDerivatives envelope_param_derivatives(const GaussianParams& p, Channel ch, double t) {
    const int c = index(ch);
    const double shape = gaussian_shape(p, ch, t);
    const double omega = p.amplitude[c] * shape;
    const double dt = t - p.center[c];
    const double s2 = p.width[c] * p.width[c];
    return {shape, omega * dt / s2, omega * dt * dt / (s2 * p.width[c])};
}

/// t0 -> eta t0, sigma -> eta sigma.
inline GaussianParams apply_time_scaling(GaussianParams p, double eta_t) {
    if (!(eta_t > 0.0)) throw ConfigError("time scaling factor must be positive");
    for (int c = 0; c < kChannelCount; ++c) {
        p.center[c] *= eta_t;
        p.width[c] *= eta_t;
    }
    return p;
}

inline GaussianParams apply_amplitude_scaling(GaussianParams p, double eta_omega) {
    if (!(eta_omega >= 0.0)) throw ConfigError("amplitude scaling factor must be non-negative");
    for (auto& a : p.amplitude) a *= eta_omega;
    return p;
}

/// Stokes before pump.
inline bool is_counterintuitive(const GaussianParams& p) {
    return p.center[index(Channel::stokes)] < p.center[index(Channel::pump)];
}

struct EnvelopeSamples {
    std::array<std::vector<double>, kChannelCount> values;

    const std::vector<double>& operator[](Channel ch) const { return values[index(ch)]; }
};

inline EnvelopeSamples sample_envelopes(const GaussianParams& p, const TimeGrid& grid) {
    EnvelopeSamples s;
    for (int c = 0; c < kChannelCount; ++c) {
        auto& v = s.values[c];
        v.resize(grid.nodes());
        for (int k = 0; k < grid.nodes(); ++k) v[k] = envelope(p, static_cast<Channel>(c), grid.time(k));
    }
    return s;
}

/// Feasible box used during optimisation.
struct ParameterBounds {
    double min_width = 0.5;  // ns
    double duration = 0.0;   // centers restricted to [0, T]

    bool operator==(const ParameterBounds&) const = default;
};

inline GaussianParams project(GaussianParams p, const ParameterBounds& b) {
    for (int c = 0; c < kChannelCount; ++c) {
        p.amplitude[c] = std::max(p.amplitude[c], 0.0);
        p.width[c] = std::max(p.width[c], b.min_width);
        p.center[c] = std::clamp(p.center[c], 0.0, b.duration);
    }
    return p;
}

/// Affine map between physical parameters and optimiser coordinates:
/// amplitudes stay in rad/ns, centers and widths are measured in units of T.
struct ParameterScaling {
    ParameterVector scale = ParameterVector::Ones();

    static ParameterScaling for_duration(double T) {
        ParameterScaling s;
        s.scale << 1.0, 1.0, T, T, T, T;
        return s;
    }

    ParameterVector to_scaled(const GaussianParams& p) const { return p.to_vector().cwiseQuotient(scale); }
    GaussianParams from_scaled(const ParameterVector& x) const {
        return GaussianParams::from_vector(x.cwiseProduct(scale));
    }
    /// dJ/dx = diag(scale) dJ/du
    ParameterVector gradient_to_scaled(const ParameterVector& du) const { return du.cwiseProduct(scale); }
};

}  // namespace stirap
