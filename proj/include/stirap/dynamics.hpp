#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "stirap/chain.hpp"
#include "stirap/common.hpp"
#include "stirap/grid.hpp"
#include "stirap/pulses.hpp"

namespace stirap {

/// H_nh(t) = H_d - (i/2) sum C^dag C + sum_ch Omega_ch(t) K_ch for Gaussian envelopes.
class ControlledGenerator {
public:
    ControlledGenerator(const ChainSystem& sys, const GaussianParams& params)
        : params_(params), static_(drift_hamiltonian(sys) + decay_operator(sys)) {
        validate(sys);
        validate(params);
        for (int c = 0; c < kChannelCount; ++c) channels_[c] = channel_operator(sys, static_cast<Channel>(c));
    }

    int dimension() const { return static_cast<int>(static_.rows()); }
    const GaussianParams& params() const { return params_; }
    const CMatrix& channel(Channel ch) const { return channels_[index(ch)]; }

    void evaluate(double t, CMatrix& out) const {
        out = static_;
        for (int c = 0; c < kChannelCount; ++c) {
            const double omega = envelope(params_, static_cast<Channel>(c), t);
            if (omega != 0.0) out.noalias() += omega * channels_[c];
        }
    }

    CMatrix at(double t) const {
        CMatrix h;
        evaluate(t, h);
        return h;
    }

private:
    GaussianParams params_;
    CMatrix static_;
    std::array<CMatrix, kChannelCount> channels_;
};

struct Trajectory {
    TimeGrid grid;
    std::vector<CVector> states;

    const CVector& final_state() const { return states.back(); }
};

inline CVector basis_state(int dimension, int level) {
    if (level < 0 || level >= dimension) throw ConfigError("basis level outside the chain");
    CVector v = CVector::Zero(dimension);
    v(level) = 1.0;
    return v;
}

namespace detail {

inline void check_initial_state(const CVector& psi0, int dimension) {
    if (psi0.size() != dimension) throw ConfigError("initial state dimension does not match the chain");
    if (std::abs(psi0.norm() - 1.0) > 1e-9) throw ConfigError("initial state must be normalised");
}

inline void check_finite(const CVector& v, int node) {
    if (!v.allFinite())
        throw NumericalError("propagation diverged at node " + std::to_string(node));
}

}  // namespace detail

/// Fixed-step RK4 for d psi/dt = -i H_nh(t) psi, H evaluated at stage times.
inline Trajectory propagate(const ChainSystem& sys, const GaussianParams& params, const TimeGrid& grid,
                            const CVector& psi0) {
    grid.validate();
    const ControlledGenerator gen(sys, params);
    const int n = gen.dimension();
    detail::check_initial_state(psi0, n);

    Trajectory traj{grid, {}};
    traj.states.reserve(grid.nodes());
    traj.states.push_back(psi0);

    const double h = grid.step();
    CMatrix h0(n, n), hm(n, n), h1(n, n);
    CVector k1(n), k2(n), k3(n), k4(n), tmp(n);
    CVector psi = psi0;
    gen.evaluate(0.0, h1);
    for (int k = 0; k < grid.steps; ++k) {
        const double t = grid.time(k);
        h0.swap(h1);
        gen.evaluate(t + 0.5 * h, hm);
        gen.evaluate(grid.time(k + 1), h1);

        k1.noalias() = -kImag * (h0 * psi);
        tmp = psi + 0.5 * h * k1;
        k2.noalias() = -kImag * (hm * tmp);
        tmp = psi + 0.5 * h * k2;
        k3.noalias() = -kImag * (hm * tmp);
        tmp = psi + h * k3;
        k4.noalias() = -kImag * (h1 * tmp);
        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        detail::check_finite(psi, k + 1);
        traj.states.push_back(psi);
    }
    return traj;
}

/// Default resolution: h <= min(sigma)/50 and h * ||H|| <= 0.05, with ||H||
/// bounded by the max-row-sum norm at peak amplitudes.
struct ResolutionRule {
    double samples_per_width = 50.0;
    double phase_per_step = 0.05;
};

inline int auto_steps(const ChainSystem& sys, const GaussianParams& params, double duration,
                      const ResolutionRule& rule = {}) {
    if (!(duration > 0.0)) throw ConfigError("duration must be positive");
    validate(params);
    const std::array<cplx, kChannelCount> peak{params.amplitude[0], params.amplitude[1]};
    const CMatrix h = non_hermitian_hamiltonian(sys, peak);
    const double norm = h.cwiseAbs().rowwise().sum().maxCoeff();
    double h_max = std::min(params.width[0], params.width[1]) / rule.samples_per_width;
    if (norm > 0.0) h_max = std::min(h_max, rule.phase_per_step / norm);
    return std::max(2, static_cast<int>(std::ceil(duration / h_max)));
}

/// Populations are unnormalised weights |<n|psi_k>|^2 under no-jump dynamics.
struct PopulationRecord {
    Eigen::MatrixXd populations;  // rows: nodes, cols: levels
    std::vector<double> leakage;
    double max_leakage = 0.0;
    double final_fidelity = 0.0;
    int target_level = 0;
};

inline PopulationRecord populations(const Trajectory& traj, const SubspacePartition& part) {
    const int nodes = static_cast<int>(traj.states.size());
    const int n = part.dimension();
    PopulationRecord rec;
    rec.target_level = part.target_level();
    rec.populations.resize(nodes, n);
    rec.leakage.assign(nodes, 0.0);
    for (int k = 0; k < nodes; ++k) {
        const CVector& psi = traj.states[k];
        if (psi.size() != n) throw ConfigError("partition dimension does not match trajectory");
        for (int j = 0; j < n; ++j) {
            const double p = std::norm(psi(j));
            rec.populations(k, j) = p;
            if (part.is_leakage(j)) rec.leakage[k] += p;
        }
        rec.max_leakage = std::max(rec.max_leakage, rec.leakage[k]);
    }
    rec.final_fidelity = rec.populations(nodes - 1, rec.target_level);
    return rec;
}

}  // namespace stirap
