#include <cmath>

#include <gtest/gtest.h>

#include "stirap/pulses.hpp"

using namespace stirap;

namespace {

GaussianParams sample() {
    GaussianParams p;
    p.amplitude = {0.7, 0.4};
    p.center = {45.0, 31.0};
    p.width = {9.0, 11.5};
    return p;
}

}  // namespace

TEST(Gaussian, PeakAndSymmetry) {
    const auto p = sample();
    EXPECT_DOUBLE_EQ(envelope(p, Channel::pump, 45.0), 0.7);
    EXPECT_NEAR(envelope(p, Channel::stokes, 31.0 - 4.0), envelope(p, Channel::stokes, 31.0 + 4.0), 1e-16);
    EXPECT_NEAR(envelope(p, Channel::pump, 54.0), 0.7 * std::exp(-0.5), 1e-15);
}

TEST(Gaussian, ParameterDerivativesMatchDifferences) {
    const auto p = sample();
    for (double t : {10.0, 30.5, 44.0, 61.0}) {
        for (int c = 0; c < kChannelCount; ++c) {
            const auto ch = static_cast<Channel>(c);
            const auto d = envelope_param_derivatives(p, ch, t);
            const double analytic[3] = {d.amplitude, d.center, d.width};
            const int idx[3] = {GaussianParams::amplitude_index(ch), GaussianParams::center_index(ch),
                                GaussianParams::width_index(ch)};
            for (int k = 0; k < 3; ++k) {
                auto up = p.to_vector(), down = p.to_vector();
                const double h = 1e-5;
                up(idx[k]) += h;
                down(idx[k]) -= h;
                const double fd = (envelope(GaussianParams::from_vector(up), ch, t) -
                                   envelope(GaussianParams::from_vector(down), ch, t)) /
                                  (2 * h);
                EXPECT_NEAR(analytic[k], fd, 1e-9);
            }
        }
    }
}

TEST(Gaussian, AmplitudeDerivativeDefinedAtZero) {
    auto p = sample();
    p.amplitude = {0.0, 0.0};
    const auto d = envelope_param_derivatives(p, Channel::pump, 40.0);
    EXPECT_GT(d.amplitude, 0.0);
    EXPECT_EQ(d.center, 0.0);
}

TEST(Scaling, TimeScalingIsExactOnSamples) {
    const auto p = sample();
    const double eta = 1.3;
    const auto q = apply_time_scaling(p, eta);
    for (double t : {0.0, 12.0, 40.0, 79.0})
        EXPECT_NEAR(envelope(q, Channel::pump, eta * t), envelope(p, Channel::pump, t), 1e-15);
    EXPECT_DOUBLE_EQ(q.amplitude[0], p.amplitude[0]);
    EXPECT_THROW(apply_time_scaling(p, 0.0), ConfigError);
}

TEST(Scaling, AmplitudeAndComposition) {
    const auto p = sample();
    EXPECT_EQ(apply_amplitude_scaling(p, 1.0), p);
    EXPECT_EQ(apply_time_scaling(p, 1.0), p);
    EXPECT_EQ(apply_amplitude_scaling(apply_time_scaling(p, 0.8), 1.1),
              apply_time_scaling(apply_amplitude_scaling(p, 1.1), 0.8));
    EXPECT_DOUBLE_EQ(apply_amplitude_scaling(p, 0.0).amplitude[1], 0.0);
    EXPECT_THROW(apply_amplitude_scaling(p, -0.1), ConfigError);
}

TEST(Ordering, Counterintuitive) {
    auto p = sample();
    EXPECT_TRUE(is_counterintuitive(p));
    std::swap(p.center[0], p.center[1]);
    EXPECT_FALSE(is_counterintuitive(p));
}

TEST(Validation, Rejects) {
    auto p = sample();
    p.width[0] = 0.0;
    EXPECT_THROW(validate(p), ConfigError);
    p = sample();
    p.amplitude[1] = -1.0;
    EXPECT_THROW(validate(p), ConfigError);
    p = sample();
    p.center[0] = NAN;
    EXPECT_THROW(validate(p), ConfigError);
}

TEST(Bounds, ProjectionClamps) {
    auto p = sample();
    p.amplitude[0] = -0.2;
    p.width[1] = 0.1;
    p.center[0] = 95.0;
    p.center[1] = -3.0;
    const auto q = project(p, {0.5, 80.0});
    EXPECT_EQ(q.amplitude[0], 0.0);
    EXPECT_EQ(q.width[1], 0.5);
    EXPECT_EQ(q.center[0], 80.0);
    EXPECT_EQ(q.center[1], 0.0);
    EXPECT_EQ(project(sample(), {0.5, 80.0}), sample());
}

TEST(Scaling, OptimizerCoordinates) {
    const auto s = ParameterScaling::for_duration(80.0);
    const auto p = sample();
    const auto x = s.to_scaled(p);
    EXPECT_DOUBLE_EQ(x(0), 0.7);
    EXPECT_DOUBLE_EQ(x(2), 45.0 / 80.0);
    const auto back = s.from_scaled(x).to_vector();
    EXPECT_LT((back - p.to_vector()).norm(), 1e-13);
}

TEST(Sampling, MatchesEnvelope) {
    const auto p = sample();
    const TimeGrid g(80.0, 160);
    const auto s = sample_envelopes(p, g);
    ASSERT_EQ(s[Channel::pump].size(), 161u);
    EXPECT_DOUBLE_EQ(s[Channel::stokes][62], envelope(p, Channel::stokes, g.time(62)));
}
