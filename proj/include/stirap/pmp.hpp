#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "stirap/chain.hpp"
#include "stirap/common.hpp"
#include "stirap/dynamics.hpp"
#include "stirap/grid.hpp"
#include "stirap/pulses.hpp"

namespace stirap {

/// J = w_f (1 - |<m|psi(T)>|^2) + int [w_1 sum_{penalised} P_n + w_leak sum_{n > m} P_n] dt
struct CostWeights {
    double terminal = 1.0;       // w_f
    double intermediate = 0.01;  // w_1, 1/ns
    double leakage = 0.05;       // w_leak, 1/ns
    std::vector<int> penalized_levels{1};
    int target_level = 2;  // m; also the top of the target manifold

    bool operator==(const CostWeights&) const = default;
};

inline void validate(const CostWeights& w, int dimension) {
    if (!(w.terminal >= 0.0) || !(w.intermediate >= 0.0) || !(w.leakage >= 0.0))
        throw ConfigError("cost weights must be non-negative");
    if (w.target_level <= 0 || w.target_level >= dimension)
        throw ConfigError("target level must satisfy 0 < m < N");
    for (int n : w.penalized_levels)
        if (n < 0 || n >= dimension) throw ConfigError("penalised level outside the chain");
}

/// Diagonal of W in L = <psi|W|psi>.
inline Eigen::VectorXd running_cost_diagonal(const CostWeights& w, int dimension) {
    validate(w, dimension);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(dimension);
    for (int n : w.penalized_levels) d(n) += w.intermediate;
    for (int n = w.target_level + 1; n < dimension; ++n) d(n) += w.leakage;
    return d;
}

struct ObjectiveReport {
    double total = 0.0;
    double terminal = 0.0;
    double running = 0.0;
    double fidelity = 0.0;
    double max_leakage = 0.0;
    std::vector<double> running_density;
};

inline ObjectiveReport objective_from_trajectory(const Trajectory& traj, const CostWeights& w) {
    const int n = static_cast<int>(traj.final_state().size());
    const Eigen::VectorXd diag = running_cost_diagonal(w, n);
    const auto pops = populations(traj, SubspacePartition(n, w.target_level));

    ObjectiveReport r;
    r.fidelity = pops.final_fidelity;
    r.max_leakage = pops.max_leakage;
    r.terminal = w.terminal * (1.0 - r.fidelity);
    r.running_density.resize(traj.states.size());
    for (std::size_t k = 0; k < traj.states.size(); ++k)
        r.running_density[k] = pops.populations.row(static_cast<Eigen::Index>(k)).dot(diag);
    r.running = trapezoid(traj.grid, [&](int k) { return r.running_density[k]; });
    r.total = r.terminal + r.running;
    return r;
}

inline ObjectiveReport objective(const ChainSystem& sys, const GaussianParams& params, const CostWeights& w,
                                 const TimeGrid& grid, const CVector& psi0) {
    return objective_from_trajectory(propagate(sys, params, grid, psi0), w);
}

/// <lambda(T)| = dphi/d|psi(T)> = -w_f <psi(T)|m><m|.
///
/// Costates here are Wirtinger derivatives of J with respect to |psi>
/// (psi and psi* independent), so dJ = 2 Re(<lambda| d psi>). The costate of
/// the real-variable formulation on R^{2N} is -2 <lambda|.
inline CRowVector terminal_costate(const CVector& final_state, const CostWeights& w) {
    CRowVector lambda = CRowVector::Zero(final_state.size());
    lambda(w.target_level) = -w.terminal * std::conj(final_state(w.target_level));
    return lambda;
}

struct CostateTrajectory {
    TimeGrid grid;
    std::vector<CRowVector> costates;  // index k <-> t_k
};

/// How psi(t) is reconstructed at the half-step RK4 stages of the backward sweep.
enum class StageInterpolation {
    linear,         // O(h^2)
    cubic_hermite,  // O(h^4), uses d psi/dt = -i H psi at the nodes
};

/// Integrates d<lambda|/dt = i <lambda| H_nh - <psi| W backwards from T with
/// RK4 on the forward grid.
inline CostateTrajectory backward_costate(const ChainSystem& sys, const GaussianParams& params,
                                          const CostWeights& w, const TimeGrid& grid, const Trajectory& traj,
                                          StageInterpolation interp = StageInterpolation::cubic_hermite) {
    if (!(traj.grid == grid) || static_cast<int>(traj.states.size()) != grid.nodes())
        throw ConfigError("state trajectory is not sampled on the costate grid");
    const ControlledGenerator gen(sys, params);
    const int n = gen.dimension();
    const Eigen::VectorXd diag = running_cost_diagonal(w, n);
    const double h = grid.step();

    auto source = [&](const CVector& psi) -> CRowVector {
        return (diag.cast<cplx>().cwiseProduct(psi.conjugate())).transpose();
    };

    CostateTrajectory out{grid, std::vector<CRowVector>(grid.nodes())};
    CRowVector lambda = terminal_costate(traj.final_state(), w);
    out.costates[grid.steps] = lambda;

    CMatrix h0(n, n), hm(n, n), h1(n, n);
    CRowVector k1(n), k2(n), k3(n), k4(n), tmp(n);
    CVector psi_mid(n);
    gen.evaluate(grid.duration, h1);
    for (int k = grid.steps - 1; k >= 0; --k) {
        const double t0 = grid.time(k);
        gen.evaluate(t0, h0);
        gen.evaluate(t0 + 0.5 * h, hm);
        const CVector& psi0 = traj.states[k];
        const CVector& psi1 = traj.states[k + 1];
        psi_mid = 0.5 * (psi0 + psi1);
        if (interp == StageInterpolation::cubic_hermite)
            psi_mid += (h / 8.0) * (-kImag) * (h0 * psi0 - h1 * psi1);

        const CRowVector src1 = source(psi1);
        const CRowVector srcm = source(psi_mid);
        const CRowVector src0 = source(psi0);

        k1.noalias() = kImag * (lambda * h1);
        k1 -= src1;
        tmp = lambda - 0.5 * h * k1;
        k2.noalias() = kImag * (tmp * hm);
        k2 -= srcm;
        tmp = lambda - 0.5 * h * k2;
        k3.noalias() = kImag * (tmp * hm);
        k3 -= srcm;
        tmp = lambda - h * k3;
        k4.noalias() = kImag * (tmp * h0);
        k4 -= src0;
        lambda -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        if (!lambda.allFinite()) throw NumericalError("costate diverged at node " + std::to_string(k));
        out.costates[k] = lambda;
        h1.swap(h0);
    }
    return out;
}

/// dJ/dOmega_ch(t_k) per channel.
struct FunctionalGradient {
    std::array<std::vector<double>, kChannelCount> values;

    const std::vector<double>& operator[](Channel ch) const { return values[index(ch)]; }
};

/// dJ/dOmega_ch(t) = 2 Im <lambda(t)| dH/dOmega_ch |psi(t)>, equivalently
/// -Im of the same matrix element with the real-variable costate -2<lambda|.
/// The running cost has no explicit envelope dependence.
inline FunctionalGradient functional_gradient(const ChainSystem& sys, const CostWeights& /*weights*/,
                                              const Trajectory& traj, const CostateTrajectory& costate) {
    if (traj.states.size() != costate.costates.size())
        throw ConfigError("state and costate trajectories have different lengths");
    FunctionalGradient g;
    for (int c = 0; c < kChannelCount; ++c) {
        const CMatrix k = channel_operator(sys, static_cast<Channel>(c));
        auto& v = g.values[c];
        v.resize(traj.states.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = 2.0 * (costate.costates[i] * (k * traj.states[i])).value().imag();
    }
    return g;
}

struct GradientReport {
    ParameterVector gradient = ParameterVector::Zero();
    FunctionalGradient functional;
    double norm = 0.0;
    ObjectiveReport objective;
};

/// dJ/du_k = int [dJ/dOmega_p dOmega_p/du_k + dJ/dOmega_s dOmega_s/du_k] dt.
inline GradientReport parameter_gradient(const ChainSystem& sys, const GaussianParams& params,
                                         const CostWeights& w, const TimeGrid& grid, const CVector& psi0,
                                         StageInterpolation interp = StageInterpolation::cubic_hermite) {
    const Trajectory traj = propagate(sys, params, grid, psi0);
    const CostateTrajectory costate = backward_costate(sys, params, w, grid, traj, interp);

    GradientReport r;
    r.objective = objective_from_trajectory(traj, w);
    r.functional = functional_gradient(sys, w, traj, costate);

    std::vector<std::array<EnvelopeDerivatives, kChannelCount>> derivs(grid.nodes());
    for (int k = 0; k < grid.nodes(); ++k)
        for (int c = 0; c < kChannelCount; ++c)
            derivs[k][c] = envelope_param_derivatives(params, static_cast<Channel>(c), grid.time(k));

    for (int c = 0; c < kChannelCount; ++c) {
        const auto ch = static_cast<Channel>(c);
        const auto& g = r.functional[ch];
        r.gradient(GaussianParams::amplitude_index(ch)) =
            trapezoid(grid, [&](int k) { return g[k] * derivs[k][c].amplitude; });
        r.gradient(GaussianParams::center_index(ch)) =
            trapezoid(grid, [&](int k) { return g[k] * derivs[k][c].center; });
        r.gradient(GaussianParams::width_index(ch)) =
            trapezoid(grid, [&](int k) { return g[k] * derivs[k][c].width; });
    }
    r.norm = r.gradient.norm();
    if (!r.gradient.allFinite()) throw NumericalError("non-finite parameter gradient");
    return r;
}

/// H_P = Im <lambda|H|psi> - L (hbar = 1). Diagnostic only.
inline double pontryagin_hamiltonian(const CVector& state, const CRowVector& costate, const CMatrix& hamiltonian,
                                     double running_cost) {
    if (costate.size() != state.size() || hamiltonian.rows() != state.size())
        throw ConfigError("dimension mismatch in Pontryagin Hamiltonian");
    return (costate * (hamiltonian * state)).value().imag() - running_cost;
}

/// Objective over the six pulse parameters in optimiser coordinates, with
/// the feasibility box applied in physical units.
struct PulseProblem {
    ChainSystem system;
    CostWeights weights;
    TimeGrid grid;
    CVector initial_state;
    ParameterBounds bounds;
    ParameterScaling scaling;

    static PulseProblem make(ChainSystem sys, CostWeights w, TimeGrid grid, double min_width = 0.5) {
        validate(sys);
        validate(w, sys.dimension());
        const int n = sys.dimension();
        return {std::move(sys), std::move(w), grid, basis_state(n, 0), {min_width, grid.duration},
                ParameterScaling::for_duration(grid.duration)};
    }

    struct Value {
        double f = 0.0;
        Eigen::VectorXd g;
    };

    GaussianParams params_from(const Eigen::VectorXd& x) const { return scaling.from_scaled(x); }
    Eigen::VectorXd scaled(const GaussianParams& p) const { return scaling.to_scaled(p); }

    Eigen::VectorXd project_scaled(const Eigen::VectorXd& x) const {
        return scaling.to_scaled(project(params_from(x), bounds));
    }

    double value(const GaussianParams& p) const {
        return objective(system, p, weights, grid, initial_state).total;
    }

    GradientReport gradient(const GaussianParams& p) const {
        return parameter_gradient(system, p, weights, grid, initial_state);
    }

    Value evaluate_scaled(const Eigen::VectorXd& x) const {
        const auto report = gradient(params_from(x));
        return {report.objective.total, scaling.gradient_to_scaled(report.gradient)};
    }
};

struct DescentConfig {
    std::vector<double> step_sizes{0.01};  // eta_k; the last entry repeats
    double tolerance = 1e-8;               // on ||x_{k+1} - x_k|| (optimiser coordinates)
    int max_iterations = 100;
    int divergence_patience = 10;

    double step(int k) const {
        if (step_sizes.empty()) throw ConfigError("gradient descent needs at least one step size");
        return step_sizes[std::min<std::size_t>(k, step_sizes.size() - 1)];
    }
};

struct DescentLogEntry {
    int iteration = 0;
    double objective = 0.0;
    double gradient_norm = 0.0;
    double step_size = 0.0;
    double update_norm = 0.0;
};

struct DescentResult {
    GaussianParams params;
    double final_objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<DescentLogEntry> log;
};

/// Parameter-level PMP iteration: u <- P(u - eta_k dJ/du), stopping when the
/// update norm drops below the tolerance.
inline DescentResult gradient_descent(const PulseProblem& problem, const GaussianParams& initial,
                                      const DescentConfig& cfg) {
    for (double eta : cfg.step_sizes)
        if (!(eta > 0.0)) throw ConfigError("gradient-descent step sizes must be positive");

    Eigen::VectorXd x = problem.project_scaled(problem.scaled(initial));
    DescentResult result;
    int increases = 0;
    double previous = 0.0;
    for (int k = 0; k < cfg.max_iterations; ++k) {
        const auto v = problem.evaluate_scaled(x);
        const double eta = cfg.step(k);
        const Eigen::VectorXd next = problem.project_scaled(x - eta * v.g);
        const double update = (next - x).norm();
        result.log.push_back({k, v.f, v.g.norm(), eta, update});
        result.iterations = k + 1;

        if (k > 0 && v.f > previous) {
            if (++increases >= cfg.divergence_patience)
                throw NumericalError("gradient descent diverging: J increased for " +
                                     std::to_string(increases) + " consecutive iterations");
        } else {
            increases = 0;
        }
        previous = v.f;

        x = next;
        if (update < cfg.tolerance) {
            result.converged = true;
            break;
        }
    }
    result.params = problem.params_from(x);
    result.final_objective = problem.value(result.params);
    return result;
}

}  // namespace stirap
