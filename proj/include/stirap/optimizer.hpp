#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "stirap/common.hpp"

namespace stirap::optim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct TrustRegionConfig {
    double initial_radius = 0.1;  // Delta_0
    double max_radius = 1.0;      // Delta_hat
    double eta = 0.1;             // acceptance threshold
    double gradient_tolerance = 1e-8;
    double min_radius = 1e-12;
    int max_iterations = 200;
    std::optional<Matrix> initial_hessian;  // B_0, identity when empty

    void validate() const {
        if (!(initial_radius > 0.0) || !(initial_radius <= max_radius))
            throw ConfigError("trust region needs 0 < Delta_0 <= Delta_max");
        if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("acceptance threshold eta must lie in (0, 1)");
        if (max_iterations < 0) throw ConfigError("max_iterations must be non-negative");
    }
};

/// m(p) = f + g^T p + p^T B p / 2
inline double quadratic_model(double f, const Vector& g, const Matrix& b, const Vector& p) {
    return f + g.dot(p) + 0.5 * p.dot(b * p);
}

/// BFGS update of the Hessian approximation. Skipped (returns false, B
/// untouched) unless y^T s > 1e-10 ||y|| ||s||.
inline bool bfgs_update(Matrix& b, const Vector& s, const Vector& y, double curvature_threshold = 1e-10) {
    const double ys = y.dot(s);
    if (!(ys > curvature_threshold * y.norm() * s.norm())) return false;
    const Vector bs = b * s;
    const double sbs = s.dot(bs);
    if (!(sbs > 0.0)) return false;
    b.noalias() += (y * y.transpose()) / ys - (bs * bs.transpose()) / sbs;
    b = 0.5 * (b + b.transpose()).eval();
    return true;
}

enum class StepKind { zero, newton, steepest_boundary, dogleg };

struct DoglegStep {
    Vector p;
    StepKind kind = StepKind::zero;
    double tau = 0.0;  // position on the second leg, dogleg case only
};

/// Dogleg approximation to min m(p) subject to ||p|| <= radius.
inline DoglegStep dogleg_step(const Vector& g, const Matrix& b, double radius) {
    if (g.norm() == 0.0) return {Vector::Zero(g.size()), StepKind::zero, 0.0};

    const Eigen::LLT<Matrix> llt(b);
    if (llt.info() != Eigen::Success) throw NumericalError("dogleg requires a positive-definite model Hessian");
    const Vector p_newton = -llt.solve(g);
    if (p_newton.norm() <= radius) return {p_newton, StepKind::newton, 0.0};

    const double gbg = g.dot(b * g);
    const Vector p_cauchy = -(g.squaredNorm() / gbg) * g;
    if (p_cauchy.norm() >= radius) return {-(radius / g.norm()) * g, StepKind::steepest_boundary, 0.0};

    // ||d||^2 tau^2 + 2 p_U.d tau + (||p_U||^2 - radius^2) = 0, root in (0, 1)
    const Vector d = p_newton - p_cauchy;
    const double a = d.squaredNorm();
    const double half_b = p_cauchy.dot(d);
    const double c = p_cauchy.squaredNorm() - radius * radius;
    const double disc = std::sqrt(half_b * half_b - a * c);
    // c < 0, so the positive root is -c / (half_b + disc) without cancellation
    const double tau = half_b >= 0.0 ? -c / (half_b + disc) : (-half_b + disc) / a;
    return {p_cauchy + tau * d, StepKind::dogleg, tau};
}

/// rho = actual / predicted decrease.
inline double rho_ratio(double f_old, double f_new, double model_decrease) {
    if (!(model_decrease > 1e-16)) throw NumericalError("degenerate model decrease");
    return (f_old - f_new) / model_decrease;
}

inline double radius_update(double rho, double radius, double step_norm, double max_radius) {
    if (rho < 0.25) return 0.25 * radius;
    if (rho > 0.75 && std::abs(step_norm - radius) <= 1e-12 * radius) return std::min(2.0 * radius, max_radius);
    return radius;
}

struct Evaluation {
    double value = 0.0;
    Vector gradient;
};

struct HistoryEntry {
    int iteration = 0;
    double f = 0.0;          // at the current iterate, after this iteration
    double gradient_norm = 0.0;
    double radius = 0.0;     // radius used for this iteration's step
    double rho = 0.0;
    bool accepted = false;
    double step_norm = 0.0;
    Vector x;                // iterate after this iteration
};

enum class Termination { gradient_tolerance, radius_collapse, max_iterations };

inline std::string to_string(Termination t) {
    switch (t) {
        case Termination::gradient_tolerance: return "gradient_tolerance";
        case Termination::radius_collapse: return "radius_collapse";
        case Termination::max_iterations: return "max_iterations";
    }
    return "unknown";
}

struct TrustRegionState {
    Vector x;
    double f = 0.0;
    Vector g;
    Matrix b;
    double radius = 0.0;
    int iteration = 0;
    std::vector<HistoryEntry> history;
};

struct MinimizeResult {
    TrustRegionState state;
    Termination termination = Termination::max_iterations;
    int accepted_steps = 0;
    int skipped_updates = 0;
};

/// Trust-region / dogleg / BFGS minimisation. `objective` maps x to
/// (f, grad f); if it throws, the trial is rejected and the radius shrinks.
/// `project` maps trial points back into the feasible set; the projected
/// displacement is the step used for the model, rho and the BFGS pair.
template <typename Objective, typename Projection>
MinimizeResult minimize(Objective&& objective, const Vector& x0, const TrustRegionConfig& cfg,
                        Projection&& project) {
    cfg.validate();
    MinimizeResult out;
    auto& st = out.state;
    st.x = x0;
    const Evaluation e0 = objective(st.x);
    st.f = e0.value;
    st.g = e0.gradient;
    st.b = cfg.initial_hessian ? *cfg.initial_hessian : Matrix::Identity(x0.size(), x0.size());
    st.radius = cfg.initial_radius;

    if (st.g.norm() < cfg.gradient_tolerance) {
        out.termination = Termination::gradient_tolerance;
        return out;
    }

    for (st.iteration = 0; st.iteration < cfg.max_iterations;) {
        const DoglegStep step = dogleg_step(st.g, st.b, st.radius);
        const Vector trial = project(Vector(st.x + step.p));
        const Vector s = trial - st.x;
        const double predicted = st.f - quadratic_model(st.f, st.g, st.b, s);

        HistoryEntry h;
        h.iteration = ++st.iteration;
        h.radius = st.radius;
        h.step_norm = s.norm();

        std::optional<Evaluation> e;
        double rho = -std::numeric_limits<double>::infinity();
        try {
            e = objective(trial);
            if (!std::isfinite(e->value) || !e->gradient.allFinite()) throw NumericalError("non-finite objective");
            rho = rho_ratio(st.f, e->value, predicted);
        } catch (const Error&) {
            e.reset();
        }

        const bool accept = e && rho > cfg.eta;
        st.radius = std::isfinite(rho) ? radius_update(rho, st.radius, s.norm(), cfg.max_radius) : 0.25 * st.radius;
        if (accept) {
            const Vector y = e->gradient - st.g;
            if (!bfgs_update(st.b, s, y)) ++out.skipped_updates;
            st.x = trial;
            st.f = e->value;
            st.g = e->gradient;
            ++out.accepted_steps;
        }

        h.f = st.f;
        h.gradient_norm = st.g.norm();
        h.rho = rho;
        h.accepted = accept;
        h.x = st.x;
        st.history.push_back(std::move(h));

        if (st.g.norm() < cfg.gradient_tolerance) {
            out.termination = Termination::gradient_tolerance;
            return out;
        }
        if (st.radius < cfg.min_radius) {
            out.termination = Termination::radius_collapse;
            return out;
        }
    }
    out.termination = Termination::max_iterations;
    return out;
}

template <typename Objective>
MinimizeResult minimize(Objective&& objective, const Vector& x0, const TrustRegionConfig& cfg) {
    return minimize(std::forward<Objective>(objective), x0, cfg, [](const Vector& x) { return x; });
}

}  // namespace stirap::optim
