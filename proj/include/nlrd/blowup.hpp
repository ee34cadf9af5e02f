#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nlrd/energy.hpp"
#include "nlrd/errors.hpp"
#include "nlrd/regimes.hpp"
#include "nlrd/scenario.hpp"

namespace nlrd {

/// d/dt y(t)^{-q(t)} = -y^{-q} [q' ln y + (q/y) y'].
inline double variable_exponent_derivative(double y, double yp, double q, double qp) {
    if (y <= 0.0) throw std::domain_error("variable_exponent_derivative: y > 0 required");
    return -std::pow(y, -q) * (qp * std::log(y) + (q / y) * yp);
}

/// Young split of the logarithmic drift term: with
///   eps = (p1'/2p1) [(p1/(p1-1)) b1]^{-(p1-1)/p1},  c = eps^{p1}/p1,
/// the bound (p1'/2p1) s^2 ln(s^2) <= b1 s^2 + c s^{p1+2} holds for s >= 0.
/// Requires p1 > 1, b1 > 0, p1' >= 0.
struct LogBound {
    double epsilon = 0.0;
    double c = 0.0;
};

inline LogBound log_bound_constant(double b1, double p1, double p1_prime) {
    if (p1 <= 1.0)
        throw std::invalid_argument("log_bound_constant: estimate requires p1 > 1");
    if (b1 <= 0.0) throw std::invalid_argument("log_bound_constant: b1 > 0 required");
    if (p1_prime < 0.0)
        throw std::invalid_argument("log_bound_constant: p1' >= 0 required");
    if (p1_prime == 0.0) return {0.0, 0.0};
    double eps = (p1_prime / (2.0 * p1)) *
                 std::pow((p1 / (p1 - 1.0)) * b1, -(p1 - 1.0) / p1);
    return {eps, std::pow(eps, p1) / p1};
}

/// Blow-up hypothesis at t1 (degenerate phase):
///   Delta = ||a^{1/2} grad u||^2 - ||g^{1/2}(t1) u||^2 ||u||^{p1(t1)} < 0.
struct CriterionResult {
    bool blowup = false;
    double delta = 0.0;
};

inline CriterionResult blowup_criterion(const std::vector<double>& u, double t1,
                                        const Scenario& sc) {
    if (classify_phase(t1, sc.schedule) != PhaseTag::Degenerate)
        throw PhaseError("blowup_criterion: requires the degenerate phase (p0(t1) = 0)");
    const auto& dom = sc.domain;
    const int n = static_cast<int>(u.size());
    auto value_at = [&](Point p) {
        double s = 0.0;
        for (int k = 1; k <= n; ++k)
            if (u[k - 1] != 0.0) s += u[k - 1] * dom.eigenfunction(k, p);
        return s;
    };
    auto grad_sq_at = [&](Point p) {
        double gx = 0.0, gy = 0.0;
        for (int k = 1; k <= n; ++k) {
            if (u[k - 1] == 0.0) continue;
            Point g = dom.eigenfunction_grad(k, p);
            gx += u[k - 1] * g.x;
            gy += u[k - 1] * g.y;
        }
        return gx * gx + gy * gy;
    };
    const int nodes = sc.solver.quad_nodes;
    double grad_term = dom.integrate(
        [&](Point p) { return sc.coeffs.a.eval(dom, p) * grad_sq_at(p); }, nodes);
    double mass_term = dom.integrate(
        [&](Point p) {
            double v = value_at(p);
            return sc.coeffs.g.eval(dom, t1, p) * v * v;
        },
        nodes);
    double r_sq = 0.0;
    for (double v : u) r_sq += v * v;
    double delta = grad_term - mass_term * std::pow(std::sqrt(r_sq), sc.schedule.p1(t1));
    return {delta < 0.0, delta};
}

/// Constant sets entering the two P1-inversion formulas: the fast-growth
/// side (a0 l1, G0) and the slow-growth side (A0 l1 + B1, g0).
struct BlowupParams {
    double kappa_fast = 0.0;  // a0 * lambda1
    double gamma_fast = 0.0;  // G0
    double kappa_slow = 0.0;  // A0 * lambda1 + B~0, with B~0 = B0 + F0
    double gamma_slow = 0.0;  // g0
    const ExponentSchedule* schedule = nullptr;
};

inline BlowupParams blowup_params_from(const EnergyParams& e) {
    BlowupParams bp;
    bp.kappa_fast = e.a0 * e.lambda1;
    bp.gamma_fast = e.G0;
    bp.kappa_slow = e.A0 * e.lambda1 + e.B1;
    bp.gamma_slow = e.g0;
    bp.schedule = e.schedule;
    return bp;
}

namespace detail {

/// Solve P1(t) = P1(t1) - ln(1 - kappa / (gamma y1^{p(t1)})) / kappa for
/// t > t1, p = p1/2; P1 inverted by bisection plus a Newton polish.
inline std::optional<double> invert_p1_time(double y1, double t1, double kappa,
                                            double gamma, const ExponentSchedule& sched) {
    if (y1 <= 0.0) throw std::invalid_argument("blow-up time: y1 > 0 required");
    if (gamma <= 0.0 || kappa <= 0.0) return std::nullopt;
    const double p_t1 = 0.5 * sched.p1(t1);
    const double drive = gamma * std::pow(y1, p_t1);
    const double arg = 1.0 - kappa / drive;
    if (arg <= 0.0 || arg >= 1.0) return std::nullopt; // needs gamma y1^p > kappa
    const double target = sched.P1(t1) - std::log(arg) / kappa;

    double lo = t1, hi = t1 + 1.0;
    int grow = 0;
    while (sched.P1(hi) < target) {
        lo = hi;
        hi = t1 + (hi - t1) * 2.0;
        if (++grow > 200) return std::nullopt; // P1 never reaches the target
    }
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        (sched.P1(mid) < target ? lo : hi) = mid;
    }
    double t = 0.5 * (lo + hi);
    for (int i = 0; i < 8; ++i) {
        double slope = sched.p1(t);
        if (slope <= 0.0) break;
        double step = (sched.P1(t) - target) / slope;
        double tn = t - step;
        if (tn <= lo || tn >= hi) break;
        t = tn;
        if (std::abs(step) < 1e-10 * std::max(1.0, std::abs(t))) break;
    }
    return t;
}

} // namespace detail

inline std::optional<double> blowup_time_upper(double y1, double t1,
                                               const BlowupParams& bp) {
    return detail::invert_p1_time(y1, t1, bp.kappa_fast, bp.gamma_fast, *bp.schedule);
}

inline std::optional<double> blowup_time_lower(double y1, double t1,
                                               const BlowupParams& bp) {
    return detail::invert_p1_time(y1, t1, bp.kappa_slow, bp.gamma_slow, *bp.schedule);
}

/// Two-sided blow-up time estimate, reported as (min, max) of the available
/// candidate times with method tags.
struct BlowupBracket {
    std::optional<double> t_lower;
    std::optional<double> t_upper;
    std::string method_lower;
    std::string method_upper;
    double delta = 0.0;
    bool detected = false;
};

inline BlowupBracket blowup_bracket(double y1, double t1, const BlowupParams& bp,
                                    const EnergyParams& ep, double horizon,
                                    double delta = 0.0,
                                    const EnvelopeOptions& env_opt = {}) {
    BlowupBracket out;
    out.delta = delta;
    std::vector<std::pair<double, std::string>> candidates;
    if (auto t = blowup_time_upper(y1, t1, bp))
        candidates.push_back({*t, "p1-inversion-fast"});
    if (auto t = blowup_time_lower(y1, t1, bp))
        candidates.push_back({*t, "p1-inversion-slow"});
    if (candidates.size() < 2 && horizon > t1) {
        EnvelopeTrajectory env = integrate_envelopes(y1, t1, ep, horizon, env_opt);
        if (env.up_blowup)
            candidates.push_back({env.t_singular_up, "envelope-singularity"});
        if (env.low_blowup)
            candidates.push_back({env.t_singular_low, "envelope-singularity"});
    }
    if (candidates.empty()) return out; // no blow-up detected
    std::sort(candidates.begin(), candidates.end());
    out.detected = true;
    out.t_lower = candidates.front().first;
    out.method_lower = candidates.front().second;
    if (candidates.size() > 1) {
        out.t_upper = candidates.back().first;
        out.method_upper = candidates.back().second;
    }
    return out;
}

/// Equality version of the degenerate-phase envelope with the logarithmic
/// drift retained (the y-form whose y^{-p(t)} transform is exactly the
/// linear bracket ODE behind the P1-inversion formula):
///   y' = -2 kappa y + 2 gamma y^{p+1} - (p'/p) y ln y,  p = p1/2.
struct SingularityResult {
    bool blown = false;
    double t_singular = 0.0;
};

inline SingularityResult integrate_logterm_envelope(double y1, double t1, double kappa,
                                                    double gamma,
                                                    const ExponentSchedule& sched,
                                                    double horizon,
                                                    double guard = 1e9,
                                                    double rtol = 1e-10) {
    OdeRhs rhs = [&](double t, const Vec& y, Vec& dy) {
        double p = 0.5 * sched.p1(t);
        double pp = 0.5 * sched.p1_prime(t);
        double yy = std::max(y[0], 1e-300);
        double d = -2.0 * kappa * y[0] + 2.0 * gamma * std::pow(yy, p + 1.0);
        if (p > 0.0 && pp != 0.0) d -= (pp / p) * y[0] * std::log(yy);
        dy[0] = d;
    };
    Guard g{[](double, const Vec& y) { return y[0]; }, guard};
    OdeOptions oo;
    oo.rtol = rtol;
    oo.atol = 1e-14;
    oo.guard_time_tol = 1e-9;
    Vec y{y1};
    OdeResult res = integrate(rhs, y, t1, horizon, oo, &g);
    if (res.reason == StopReason::GuardTripped) return {true, res.t};
    if (res.reason == StopReason::StepUnderflow) {
        // underflow with the state already enormous: the asymptote sits
        // within one time-resolution unit of res.t
        if (y[0] > 0.5 * guard) return {true, res.t};
        throw IntegratorError("log-term envelope: step underflow");
    }
    return {false, 0.0};
}

} // namespace nlrd
