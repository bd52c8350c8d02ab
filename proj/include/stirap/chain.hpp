#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "stirap/common.hpp"

namespace stirap {

/// Coupling between levels `lower` and `lower + 1`, driven by one channel.
/// The complex Rabi frequency of the link is scale * envelope * exp(i phase).
struct Link {
    int lower = 0;
    Channel channel = Channel::pump;
    double scale = 1.0;
    double phase = 0.0;

    bool operator==(const Link&) const = default;
};

/// Relaxation |from> -> |to> with collapse operator sqrt(rate) |to><from|.
struct Decay {
    double rate = 0.0;
    int from = 1;
    int to = 0;

    bool operator==(const Decay&) const = default;
};

/// N-level nearest-neighbour chain in the rotating frame (hbar = 1, rad/ns).
struct ChainSystem {
    std::vector<double> detunings;
    std::vector<Link> links;
    std::vector<Decay> decays;

    int dimension() const { return static_cast<int>(detunings.size()); }
    bool operator==(const ChainSystem&) const = default;
};

inline void validate(const ChainSystem& sys) {
    const int n = sys.dimension();
    if (n < 2) throw ConfigError("chain needs at least two levels");
    std::vector<bool> seen(n - 1, false);
    for (const auto& link : sys.links) {
        if (link.lower < 0 || link.lower >= n - 1)
            throw ConfigError("link lower index " + std::to_string(link.lower) + " outside chain");
        if (seen[link.lower])
            throw ConfigError("duplicate link " + std::to_string(link.lower) + "-" +
                              std::to_string(link.lower + 1));
        seen[link.lower] = true;
        if (!(link.scale > 0.0)) throw ConfigError("link scale factors must be positive");
    }
    for (const auto& d : sys.decays) {
        if (!(d.rate >= 0.0)) throw ConfigError("decay rates must be non-negative");
        if (d.from < 0 || d.from >= n || d.to < 0 || d.to >= n)
            throw ConfigError("decay channel references a level outside the chain");
    }
}

inline cplx envelope_for(const Link& link, std::span<const cplx> envelopes) {
    const int ch = index(link.channel);
    if (ch >= static_cast<int>(envelopes.size()))
        throw ConfigError("no envelope supplied for channel '" + std::string(to_string(link.channel)) + "'");
    return envelopes[ch];
}

/// Complex Rabi frequency Omega_{j,j+1} carried by a link.
inline cplx link_coupling(const Link& link, std::span<const cplx> envelopes) {
    return link.scale * envelope_for(link, envelopes) * std::polar(1.0, link.phase);
}

inline CMatrix drift_hamiltonian(const ChainSystem& sys) {
    const int n = sys.dimension();
    CMatrix h = CMatrix::Zero(n, n);
    for (int j = 0; j < n; ++j) h(j, j) = sys.detunings[j];
    return h;
}

/// -(i/2) sum_mu C_mu^dag C_mu. Diagonal because every collapse operator is a
/// single matrix unit.
inline CMatrix decay_operator(const ChainSystem& sys) {
    const int n = sys.dimension();
    CMatrix d = CMatrix::Zero(n, n);
    for (const auto& decay : sys.decays) d(decay.from, decay.from) += -0.5 * kImag * decay.rate;
    return d;
}

/// dH/dOmega_ch for a real envelope on channel ch.
inline CMatrix channel_operator(const ChainSystem& sys, Channel ch) {
    const int n = sys.dimension();
    CMatrix k = CMatrix::Zero(n, n);
    for (const auto& link : sys.links) {
        if (link.channel != ch) continue;
        const cplx c = 0.5 * link.scale * std::polar(1.0, link.phase);
        k(link.lower, link.lower + 1) += c;
        k(link.lower + 1, link.lower) += std::conj(c);
    }
    return k;
}

/// Hermitian tridiagonal RWA Hamiltonian for the given channel envelopes.
inline CMatrix assemble_hamiltonian(const ChainSystem& sys, std::span<const cplx> envelopes) {
    CMatrix h = drift_hamiltonian(sys);
    for (const auto& link : sys.links) {
        const cplx c = 0.5 * link_coupling(link, envelopes);
        h(link.lower, link.lower + 1) = c;
        h(link.lower + 1, link.lower) = std::conj(c);
    }
    return h;
}

inline CMatrix non_hermitian_hamiltonian(const ChainSystem& sys, std::span<const cplx> envelopes) {
    return assemble_hamiltonian(sys, envelopes) + decay_operator(sys);
}

/// Quadrature control operators of one link:
///   X = (|j><j+1| + |j+1><j|)/2,  Y = (i|j><j+1| - i|j+1><j|)/2.
struct ControlPair {
    int lower = 0;
    CMatrix x;
    CMatrix y;
};

inline std::vector<ControlPair> control_operators(const ChainSystem& sys) {
    const int n = sys.dimension();
    std::vector<ControlPair> out;
    out.reserve(sys.links.size());
    for (const auto& link : sys.links) {
        const int j = link.lower;
        ControlPair pair{j, CMatrix::Zero(n, n), CMatrix::Zero(n, n)};
        pair.x(j, j + 1) = 0.5;
        pair.x(j + 1, j) = 0.5;
        pair.y(j, j + 1) = 0.5 * kImag;
        pair.y(j + 1, j) = -0.5 * kImag;
        out.push_back(std::move(pair));
    }
    return out;
}

class DarkStateError : public Error {
public:
    enum class Reason { even_chain, degenerate, misaligned_detunings };

    DarkStateError(Reason reason, const std::string& what) : Error(what), reason_(reason) {}
    Reason reason() const { return reason_; }

private:
    Reason reason_;
};

struct DarkState {
    std::vector<cplx> amplitudes;  // A_k on level 2k, unnormalised
    double normalization = 0.0;
    CVector state;
};

/// End-to-end dark state of an odd chain, supported on the even sublattice.
/// Requires the even-level detunings to agree within `alignment_tolerance`.
inline DarkState dark_state(const ChainSystem& sys, std::span<const cplx> envelopes,
                            double alignment_tolerance = 1e-9) {
    const int n_levels = sys.dimension();
    if (n_levels % 2 == 0)
        throw DarkStateError(DarkStateError::Reason::even_chain,
                             "even-length chain (N = " + std::to_string(n_levels) +
                                 ") has no end-to-end dark state");
    for (int j = 2; j < n_levels; j += 2) {
        if (std::abs(sys.detunings[j] - sys.detunings[0]) > alignment_tolerance)
            throw DarkStateError(DarkStateError::Reason::misaligned_detunings,
                                 "even-sublattice detunings are not aligned");
    }

    std::vector<cplx> coupling(n_levels - 1, cplx{0.0});
    for (const auto& link : sys.links) coupling[link.lower] = link_coupling(link, envelopes);

    const int n = (n_levels - 1) / 2;
    DarkState out;
    out.amplitudes.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
        cplx a = (k % 2 == 0) ? 1.0 : -1.0;
        for (int m = 0; m < k; ++m) a *= std::conj(coupling[2 * m]);
        for (int m = k; m < n; ++m) a *= coupling[2 * m + 1];
        out.amplitudes[k] = a;
    }

    double norm2 = 0.0;
    for (const auto& a : out.amplitudes) norm2 += std::norm(a);
    out.normalization = std::sqrt(norm2);
    if (!(out.normalization > 0.0) || !std::isfinite(out.normalization))
        throw DarkStateError(DarkStateError::Reason::degenerate,
                             "all dark-state amplitudes vanish for these envelopes");

    out.state = CVector::Zero(n_levels);
    for (int k = 0; k <= n; ++k) out.state(2 * k) = out.amplitudes[k] / out.normalization;
    return out;
}

struct MixingAngle {
    double theta = 0.0;  // in [0, pi/2]
    double phase = 0.0;  // arg Omega_01 - arg Omega_12
};

/// tan(theta) = |Omega_01| / |Omega_12|; theta = pi/2 when Omega_12 = 0.
inline MixingAngle mixing_angle(cplx omega_01, cplx omega_12) {
    if (omega_01 == cplx{0.0} && omega_12 == cplx{0.0})
        throw ConfigError("mixing angle undefined when both couplings vanish");
    return {std::atan2(std::abs(omega_01), std::abs(omega_12)), std::arg(omega_01) - std::arg(omega_12)};
}

/// Target manifold {0..m} and leakage manifold {m+1..N-1}.
class SubspacePartition {
public:
    SubspacePartition(int dimension, int m) : dimension_(dimension), m_(m) {
        if (m <= 0 || m >= dimension)
            throw ConfigError("partition level m = " + std::to_string(m) + " must satisfy 0 < m < " +
                              std::to_string(dimension));
    }

    int dimension() const { return dimension_; }
    int target_level() const { return m_; }
    bool is_leakage(int level) const { return level > m_; }

    std::vector<int> target_levels() const { return range(0, m_ + 1); }
    std::vector<int> leakage_levels() const { return range(m_ + 1, dimension_); }

    CMatrix target_projector() const { return projector(0, m_ + 1); }
    CMatrix leakage_projector() const { return projector(m_ + 1, dimension_); }

private:
    static std::vector<int> range(int lo, int hi) {
        std::vector<int> v;
        for (int i = lo; i < hi; ++i) v.push_back(i);
        return v;
    }
    CMatrix projector(int lo, int hi) const {
        CMatrix p = CMatrix::Zero(dimension_, dimension_);
        for (int i = lo; i < hi; ++i) p(i, i) = 1.0;
        return p;
    }

    int dimension_;
    int m_;
};

inline SubspacePartition partition(const ChainSystem& sys, int m) { return {sys.dimension(), m}; }

}  // namespace stirap
