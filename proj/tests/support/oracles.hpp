#pragma once

// Independent reference computations used only by the test suites.

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "stirap/chain.hpp"
#include "stirap/dynamics.hpp"
#include "stirap/gradcheck.hpp"
#include "stirap/pmp.hpp"
#include "stirap/pulses.hpp"

namespace stirap::oracle {

/// Exponential-midpoint propagation psi_{k+1} = exp(-i h H(t_k + h/2)) psi_k.
/// Builds H through assemble_hamiltonian / non_hermitian_hamiltonian rather
/// than the RK4 generator.
inline Trajectory propagate_oracle(const ChainSystem& sys, const GaussianParams& params, const TimeGrid& grid,
                                   const CVector& psi0) {
    Trajectory traj{grid, {psi0}};
    traj.states.reserve(grid.nodes());
    const double h = grid.step();
    CVector psi = psi0;
    for (int k = 0; k < grid.steps; ++k) {
        const double tm = grid.time(k) + 0.5 * h;
        const std::array<cplx, kChannelCount> env{envelope(params, Channel::pump, tm),
                                                  envelope(params, Channel::stokes, tm)};
        const CMatrix gen = (-kImag * h) * non_hermitian_hamiltonian(sys, env);
        psi = gen.exp() * psi;
        if (!psi.allFinite()) throw NumericalError("oracle propagation diverged");
        traj.states.push_back(psi);
    }
    return traj;
}

struct RandomInstance {
    ChainSystem system;
    GaussianParams params;
    CostWeights weights;
    TimeGrid grid;
};

/// Five-level chain with transmon couplings, detunings in +-1 rad/ns and
/// random Gaussian pulses inside the window.
inline RandomInstance random_instance(std::mt19937_64& rng, bool dissipative, double duration = 40.0,
                                      int steps = 4000) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    RandomInstance inst;
    inst.system.detunings = {0.0, uniform(-1, 1), uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
    const double phase_p = uniform(-M_PI, M_PI);
    const double phase_s = uniform(-M_PI, M_PI);
    for (int j = 0; j < 4; ++j) {
        const Channel ch = j % 2 == 0 ? Channel::pump : Channel::stokes;
        inst.system.links.push_back({j, ch, std::sqrt(j + 1.0), ch == Channel::pump ? phase_p : phase_s});
    }
    if (dissipative)
        for (int j = 1; j < 5; ++j) inst.system.decays.push_back({uniform(0.0, 0.05), j, j - 1});

    const double T = duration;
    inst.params.amplitude = {uniform(0.2, 1.0), uniform(0.2, 1.0)};
    inst.params.center = {uniform(0.4 * T, 0.6 * T), uniform(0.35 * T, 0.55 * T)};
    inst.params.width = {uniform(T / 14, T / 9), uniform(T / 14, T / 9)};

    inst.weights.terminal = 1.0;
    inst.weights.intermediate = uniform(0.0, 0.05);
    inst.weights.leakage = uniform(0.0, 0.1);
    inst.grid = TimeGrid(T, steps);
    return inst;
}

}  // namespace stirap::oracle
