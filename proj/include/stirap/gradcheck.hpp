#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "stirap/pmp.hpp"
#include "stirap/pulses.hpp"

namespace stirap {

/// Central differences of the discrete objective in physical units. The step
/// for component k is rel_step * max(|u_k|, floor_k), with floor 0.1 rad/ns
/// for amplitudes and 1 ns for centers and widths.
inline ParameterVector finite_difference_gradient(const ChainSystem& sys, const GaussianParams& params,
                                                  const CostWeights& w, const TimeGrid& grid, const CVector& psi0,
                                                  double rel_step = 1e-5) {
    const ParameterVector u = params.to_vector();
    ParameterVector g;
    for (int k = 0; k < kParamCount; ++k) {
        const double floor = k < 2 ? 0.1 : 1.0;
        const double eps = rel_step * std::max(std::abs(u(k)), floor);
        ParameterVector up = u, down = u;
        up(k) += eps;
        down(k) -= eps;
        const double fp = objective(sys, GaussianParams::from_vector(up), w, grid, psi0).total;
        const double fm = objective(sys, GaussianParams::from_vector(down), w, grid, psi0).total;
        g(k) = (fp - fm) / (up(k) - down(k));
    }
    return g;
}

struct GradientCheckRow {
    double analytic = 0.0;
    double finite_difference = 0.0;
    double abs_error = 0.0;
    double rel_error = 0.0;
    bool pass = false;
};

struct GradientCheck {
    std::array<GradientCheckRow, kParamCount> rows;
    bool pass = true;
};

/// Component k passes when |a - fd| <= rel |fd| or |a - fd| <= abs.
inline GradientCheck compare_gradients(const ParameterVector& analytic, const ParameterVector& reference,
                                       double rel = 1e-5, double abs = 1e-8) {
    GradientCheck out;
    for (int k = 0; k < kParamCount; ++k) {
        auto& r = out.rows[k];
        r.analytic = analytic(k);
        r.finite_difference = reference(k);
        r.abs_error = std::abs(analytic(k) - reference(k));
        r.rel_error = reference(k) != 0.0 ? r.abs_error / std::abs(reference(k)) : (r.abs_error == 0.0 ? 0.0 : INFINITY);
        r.pass = r.abs_error <= rel * std::abs(reference(k)) || r.abs_error <= abs;
        out.pass = out.pass && r.pass;
    }
    return out;
}

}  // namespace stirap
