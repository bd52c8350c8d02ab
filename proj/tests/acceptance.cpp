// One line per acceptance criterion; exit status is non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "stirap/config.hpp"
#include "stirap/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace stirap;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s  %-22s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const std::string kReference = std::string(STIRAP_CONFIG_DIR) + "/reference.json";

Outcome gradient_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240611);
    int configs = 0, bad = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 24; ++trial) {
        const bool dissipative = trial % 2 == 1;
        const auto inst = oracle::random_instance(rng, dissipative);
        const CVector psi0 = basis_state(5, 0);
        const auto g = parameter_gradient(inst.system, inst.params, inst.weights, inst.grid, psi0).gradient;
        const auto fd = finite_difference_gradient(inst.system, inst.params, inst.weights, inst.grid, psi0);
        const auto check = compare_gradients(g, fd, 1e-5, 1e-8);
        for (const auto& r : check.rows)
            if (std::abs(r.finite_difference) > 1e-8) worst = std::max(worst, r.rel_error);
        bad += check.pass ? 0 : 1;
        ++configs;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {bad == 0 && configs >= 20 && secs < 120.0,
            fmt("%d configs (half dissipative), %d failing, worst rel err %.2e, %.1f s (limit 120 s)", configs, bad,
                worst, secs)};
}

Outcome propagator_suite() {
    const auto c = load_config(kReference);
    const auto m = build_model(c);
    const CVector psi0 = basis_state(5, 0);

    const auto rk = propagate(m.system, c.pulses, m.grid, psi0);
    const auto ex = oracle::propagate_oracle(m.system, c.pulses, TimeGrid(m.grid.duration, 8 * m.grid.steps), psi0);
    const double oracle_err = (rk.final_state() - ex.final_state()).cwiseAbs().maxCoeff();

    ChainSystem two;
    two.detunings = {0.0, 0.0};
    two.links = {{0, Channel::pump, 1.0, 0.0}};
    GaussianParams flat;
    flat.amplitude = {0.8, 0.0};
    flat.center = {0.0, 0.0};
    flat.width = {1e7, 1.0};
    const TimeGrid g(20.0, 4000);
    const auto rabi = propagate(two, flat, g, basis_state(2, 0));
    double rabi_err = 0.0;
    for (int k = 0; k < g.nodes(); ++k)
        rabi_err = std::max(rabi_err, std::abs(std::norm(rabi.states[k](1)) - std::pow(std::sin(0.4 * g.time(k)), 2)));

    two.decays = {{0.07, 1, 0}};
    flat.amplitude = {0.0, 0.0};
    const auto dec = propagate(two, flat, g, basis_state(2, 1));
    double decay_err = 0.0;
    for (int k = 0; k < g.nodes(); ++k)
        decay_err = std::max(decay_err, std::abs(dec.states[k].squaredNorm() - std::exp(-0.07 * g.time(k))));

    ChainSystem closed = m.system;
    closed.decays.clear();
    const auto herm = propagate(closed, c.pulses, m.grid, psi0);
    double norm_err = 0.0;
    for (const auto& s : herm.states) norm_err = std::max(norm_err, std::abs(s.norm() - 1.0));

    return {oracle_err < 1e-6 && rabi_err < 1e-6 && decay_err < 1e-6 && norm_err < 1e-9,
            fmt("oracle %.2e (<1e-6), Rabi %.2e (<1e-6), decay %.2e (<1e-6), norm drift %.2e (<1e-9)", oracle_err,
                rabi_err, decay_err, norm_err)};
}

Outcome dark_state_suite() {
    ChainSystem sys;
    sys.detunings.assign(5, 0.0);
    for (int j = 0; j < 4; ++j) sys.links.push_back({j, j % 2 ? Channel::stokes : Channel::pump, 1.0, 0.0});
    const std::array<cplx, 2> env{1.0, 1.0};
    const auto d = dark_state(sys, env);
    const double r = 1.0 / std::sqrt(3.0);
    const double state_err = std::max({std::abs(d.state(0) - r), std::abs(d.state(2) + r), std::abs(d.state(4) - r),
                                       std::abs(d.state(1)), std::abs(d.state(3))});
    const double residual = (assemble_hamiltonian(sys, env) * d.state).norm();

    ChainSystem even = sys;
    even.detunings.pop_back();
    even.links.pop_back();
    bool raised = false;
    try {
        dark_state(even, env);
    } catch (const DarkStateError& e) {
        raised = e.reason() == DarkStateError::Reason::even_chain;
    }
    return {state_err < 1e-12 && residual < 1e-10 && raised,
            fmt("state err %.2e (<1e-12), residual %.2e (<1e-10), even N raises: %s", state_err, residual,
                raised ? "yes" : "no")};
}

Outcome spectrum_suite() {
    double e0 = 0.0, anh = 0.0, zpf = 0.0;
    for (double ratio : {20.0, 35.0, 50.0, 100.0}) {
        const TransmonSpec spec{2.0 * M_PI * 0.25, ratio * 2.0 * M_PI * 0.25, 5};
        const auto s = level_spectrum(spec);
        const double xi = expansion_parameter(spec);
        e0 = std::max(e0, std::abs(s.energy(0)));
        anh = std::max(anh, std::abs(s.transition(1) - s.transition(0) -
                                     (-spec.charging_energy + spec.charging_energy * xi / 2.0)));
        const auto z = zpf_amplitudes(spec);
        zpf = std::max(zpf, std::abs(z.phase * z.number - 0.5));
    }
    return {e0 == 0.0 && anh < 1e-12 && zpf < 1e-12,
            fmt("|E_0| %.1e, anharmonicity identity %.2e (<1e-12), zpf product %.2e (<1e-12)", e0, anh, zpf)};
}

bool accepted_strictly_decreasing(const optim::MinimizeResult& r, double f0) {
    double prev = f0;
    for (const auto& h : r.state.history) {
        if (!h.accepted) continue;
        if (!(h.f < prev)) return false;
        prev = h.f;
    }
    return true;
}

Outcome optimizer_suite() {
    using optim::Matrix;
    using optim::Vector;
    bool monotone = true;

    Matrix a = Matrix::Zero(6, 6);
    for (int i = 0; i < 6; ++i) {
        a(i, i) = 1.0 + i;
        if (i + 1 < 6) a(i, i + 1) = a(i + 1, i) = 0.3;
    }
    const Vector c = (Vector(6) << 1, -2, 0.5, 3, -1, 0.25).finished();
    auto quad = [&](const Vector& x) { return optim::Evaluation{0.5 * x.dot(a * x) - c.dot(x), a * x - c}; };
    const auto rq = optim::minimize(quad, Vector::Zero(6), optim::TrustRegionConfig{});
    const bool quad_ok = rq.state.g.norm() < 1e-8 && rq.state.iteration <= 25;
    monotone = monotone && accepted_strictly_decreasing(rq, 0.0);

    auto rosen = [](const Vector& x) {
        const double p = 1.0 - x(0), q = x(1) - x(0) * x(0);
        Vector g(2);
        g << -2.0 * p - 400.0 * x(0) * q, 200.0 * q;
        return optim::Evaluation{p * p + 100.0 * q * q, g};
    };
    const Vector x0 = (Vector(2) << -1.2, 1.0).finished();
    const auto rr = optim::minimize(rosen, x0, optim::TrustRegionConfig{});
    const bool rosen_ok = rr.state.f < 1e-8 && rr.state.iteration <= 200;
    monotone = monotone && accepted_strictly_decreasing(rr, rosen(x0).value);

    const Vector g1 = (Vector(2) << -1.0, -1.0).finished();
    Matrix b1(2, 2);
    b1 << 1.0, 0.0, 0.0, 3.0;
    const Vector mid = (Vector(2) << 0.75, 5.0 / 12.0).finished();
    const auto s1 = optim::dogleg_step(g1, b1, mid.norm());
    const double tau_err = std::max(std::abs(s1.tau - 0.5), (s1.p - mid).norm());
    const auto s2 = optim::dogleg_step((Vector(2) << 1.0, 0.0).finished(), Matrix::Identity(2, 2), 0.5);
    const double bnd_err = (s2.p - (Vector(2) << -0.5, 0.0).finished()).norm();

    double secant = 0.0;
    Matrix bq = Matrix::Identity(6, 6);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (int k = 0; k < 10; ++k) {
        Vector s(6);
        for (int i = 0; i < 6; ++i) s(i) = normal(rng);
        const Vector y = a * s;
        optim::bfgs_update(bq, s, y);
        secant = std::max(secant, (bq * s - y).norm());
    }

    const bool pass = quad_ok && rosen_ok && tau_err < 1e-12 && bnd_err < 1e-12 && secant <= 1e-8 && monotone;
    return {pass, fmt("quadratic |g| %.1e in %d it (<1e-8, <=25); Rosenbrock f %.1e in %d it (<1e-8, <=200); "
                      "dogleg tau-case %.1e, boundary %.1e (<1e-12); secant %.1e (<=1e-8); monotone %s",
                      rq.state.g.norm(), rq.state.iteration, rr.state.f, rr.state.iteration, tau_err, bnd_err, secant,
                      monotone ? "yes" : "no")};
}

struct ReferenceRun {
    RunConfig config;
    Model model;
    GaussianParams optimized;
    PopulationRecord before, after;
    optim::MinimizeResult result;
    double seconds = 0.0;
};

const ReferenceRun& reference_run() {
    static const ReferenceRun run = [] {
        ReferenceRun r;
        const auto t0 = std::chrono::steady_clock::now();
        r.config = load_config(kReference);
        r.model = build_model(r.config);
        const auto problem = build_problem(r.config, r.model);
        r.result = optim::minimize(
            [&](const Eigen::VectorXd& x) {
                const auto v = problem.evaluate_scaled(x);
                return optim::Evaluation{v.f, v.g};
            },
            problem.scaled(r.config.pulses), trust_region_config(r.config.optimizer),
            [&](const Eigen::VectorXd& x) { return problem.project_scaled(x); });
        r.optimized = problem.params_from(r.result.state.x);
        const auto part = partition(r.model.system, r.config.weights.target_level);
        const CVector psi0 = basis_state(r.model.system.dimension(), 0);
        r.before = populations(propagate(r.model.system, r.config.pulses, r.model.grid, psi0), part);
        r.after = populations(propagate(r.model.system, r.optimized, r.model.grid, psi0), part);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }();
    return run;
}

Outcome end_to_end() {
    const auto& r = reference_run();
    const bool pass = r.after.final_fidelity >= 0.99 && r.after.final_fidelity > r.before.final_fidelity &&
                      r.after.max_leakage < r.before.max_leakage && is_counterintuitive(r.optimized) &&
                      r.seconds < 600.0;
    return {pass, fmt("F %.4f -> %.4f (>=0.99), max P3+P4 %.4f -> %.4f, t0_s %.2f < t0_p %.2f, T_eff %.1f -> %.1f ns, "
                      "%d iterations, %.1f s (limit 600 s)",
                      r.before.final_fidelity, r.after.final_fidelity, r.before.max_leakage, r.after.max_leakage,
                      r.optimized.center[1], r.optimized.center[0],
                      effective_duration(r.config.pulses, r.model.grid.duration),
                      effective_duration(r.optimized, r.model.grid.duration), r.result.state.iteration, r.seconds)};
}

Outcome robustness_scans() {
    const auto& r = reference_run();
    const Scenario s = build_scenario(r.config, r.model);
    std::vector<double> eta, delta;
    for (int i = 0; i <= 30; ++i) {
        eta.push_back(0.85 + 0.3 * i / 30.0);
        delta.push_back(2.0 * M_PI * 0.01 * (-1.0 + 2.0 * i / 30.0));
    }
    const int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const auto a = scan_1d(s, r.config.pulses, r.optimized, Knob::amplitude_scale, eta, workers);
    const auto b = scan_1d(s, r.config.pulses, r.optimized, Knob::raman_bias, delta, workers);
    int good = 0, total = 0;
    for (const auto* scan : {&a, &b})
        for (const auto& p : scan->points) {
            ++total;
            if (p.error.empty() && (p.capped || (p.improvement && *p.improvement > 1.0))) ++good;
        }
    const double frac = static_cast<double>(good) / total;
    const double inset = improvement_factor(0.911, 0.998).value;
    const bool inset_ok = std::abs(inset - 44.5) <= 1e-9 * 44.5;
    return {frac >= 0.9 && inset_ok,
            fmt("I > 1 at %d/%d points (%.0f%%, need >=90%%) over eta_Omega in [0.85,1.15] and |delta| <= 2pi*10 MHz; "
                "I(0.911, 0.998) = %.12g (44.5 to 1e-9 rel)",
                good, total, 100.0 * frac, inset)};
}

Outcome descent_property() {
    std::mt19937_64 rng(777);
    int configs = 0, decreased = 0, skipped = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = oracle::random_instance(rng, trial % 2 == 1, 40.0, 3000);
        const CVector psi0 = basis_state(5, 0);
        const auto g = parameter_gradient(inst.system, inst.params, inst.weights, inst.grid, psi0);
        if (!(g.norm > 1e-8)) {
            ++skipped;
            continue;
        }
        ++configs;
        // u <- u - eta dJ/du with a step length of 1e-5 in parameter space
        const double eta = 1e-5 / g.norm;
        const GaussianParams next = GaussianParams::from_vector(inst.params.to_vector() - eta * g.gradient);
        if (objective(inst.system, next, inst.weights, inst.grid, psi0).total < g.objective.total) ++decreased;
    }
    return {decreased == configs && configs + skipped == 20,
            fmt("J decreased on %d/%d configs with |grad J| > 1e-8 (%d below threshold)", decreased, configs, skipped)};
}

}  // namespace

int main() {
    report("gradient-oracle", gradient_suite);
    report("propagator-oracle", propagator_suite);
    report("dark-state", dark_state_suite);
    report("spectrum", spectrum_suite);
    report("optimizer", optimizer_suite);
    report("end-to-end", end_to_end);
    report("robustness-scans", robustness_scans);
    report("descent-property", descent_property);
    std::printf("%s: %d criteria failing\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
