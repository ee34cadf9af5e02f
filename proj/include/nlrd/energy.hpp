#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "nlrd/errors.hpp"
#include "nlrd/exponents.hpp"
#include "nlrd/ode.hpp"
#include "nlrd/quadrature.hpp"
#include "nlrd/scenario.hpp"

namespace nlrd {

/// Constant envelope data: a0 <= a <= A0, b1 = b0 + f0, B1 = B0 + F0,
/// g0 <= g <= G0, smallest eigenvalue, and the p1 schedule (P1' = p1,
/// P1(0) = 0 closed form).
struct EnergyParams {
    double a0 = 1.0, A0 = 1.0;
    double b1 = 0.0, B1 = 0.0;
    double g0 = 0.0, G0 = 0.0;
    double lambda1 = 1.0;
    const ExponentSchedule* schedule = nullptr;
};

inline EnergyParams energy_params_from(const Scenario& sc) {
    EnergyParams p;
    p.a0 = sc.coeffs.a_bounds.lo;
    p.A0 = sc.coeffs.a_bounds.hi;
    p.b1 = sc.coeffs.b_bounds.lo + sc.coeffs.f_bounds.lo;
    p.B1 = sc.coeffs.b_bounds.hi + sc.coeffs.f_bounds.hi;
    p.g0 = sc.coeffs.g_bounds.lo;
    p.G0 = sc.coeffs.g_bounds.hi;
    p.lambda1 = sc.domain.eigenvalue(1);
    p.schedule = &sc.schedule;
    return p;
}

/// Regime data entering the semi-flow value ||u(t1)||^2: the damping
/// integrands on the dissipative [0, t0] and non-dissipative [t0, t1]
/// stretches.
struct SemiflowData {
    double a0_lambda1 = 0.0;
    double t0 = 0.0;
    std::function<double(double)> b10; // on [0, t0]
    std::function<double(double)> b1;  // on [t0, t1]
    std::function<double(double)> g10; // on [t0, t1]
    double r0 = 0.0;
    std::function<double(double)> p1;
};

/// ||u(t1)||^2 = exp{-[a0 l1 t1 + int_0^t0 b10 + int_t0^t1 (b1 - g10 r0^{p1})]} ||u0||^2.
inline double semiflow_norm(double t1, double u0_norm_sq, const SemiflowData& d) {
    if (t1 < d.t0 || d.t0 < 0.0)
        throw std::invalid_argument("semiflow_norm: need t1 >= t0 >= 0");
    double expo = d.a0_lambda1 * t1;
    if (d.t0 > 0.0) expo += integrate_1d(d.b10, 0.0, d.t0, 128);
    if (t1 > d.t0)
        expo += integrate_1d(
            [&](double s) { return d.b1(s) - d.g10(s) * std::pow(d.r0, d.p1(s)); }, d.t0,
            t1, 128);
    return std::exp(-expo) * u0_norm_sq;
}

/// Self-consistent bound r(t)^2 <= exp{-2 kappa t + 2 g10 int_0^t r^{p1}} r0^2,
/// resolved by damped fixed-point iteration on a uniform grid (damping 0.5,
/// at most 100 sweeps). kappa = a0*lambda1 + b1.
struct DecayBound {
    bool converged = false;
    double value = 0.0; // bound on r(t)^2
    int iterations = 0;
};

inline DecayBound decay_envelope(double t, double r0, double kappa, double g10,
                                 const std::function<double(double)>& p1,
                                 int grid = 1024) {
    if (t < 0.0) throw std::invalid_argument("decay_envelope: t >= 0 required");
    DecayBound out;
    if (t == 0.0) return {true, r0 * r0, 0};
    const int n = grid;
    const double dt = t / n;
    std::vector<double> r(n + 1), rp(n + 1);
    for (int i = 0; i <= n; ++i) r[i] = r0 * std::exp(-kappa * dt * i);
    for (int it = 1; it <= 100; ++it) {
        out.iterations = it;
        for (int i = 0; i <= n; ++i) rp[i] = std::pow(r[i], p1(dt * i));
        double integral = 0.0, worst = 0.0;
        for (int i = 1; i <= n; ++i) {
            integral += 0.5 * (rp[i - 1] + rp[i]) * dt;
            double rn = r0 * std::exp(-kappa * dt * i + g10 * integral);
            if (!std::isfinite(rn)) return out; // diverged
            double mixed = 0.5 * r[i] + 0.5 * rn;
            worst = std::max(worst, std::abs(mixed - r[i]));
            r[i] = mixed;
        }
        if (worst < 1e-12 * std::max(r0, 1.0)) {
            out.converged = true;
            out.value = r[n] * r[n];
            return out;
        }
    }
    return out; // not converged within 100 iterations
}

/// Hypothesis of the small-data decay theorem:
///   g10 (e^{-(a0 l1 + b1_bar) t0} r0)^{p1(t0)} < a0 l1 + b10(t0).
struct SolvabilityData {
    double a0_lambda1 = 0.0;
    double b1_bar = 0.0; // sup of inf_x b1 over (0, t0)
    double b10_t0 = 0.0; // inf_x |b1| at t0 (non-dissipative form)
    double g10 = 0.0;    // sup_x g1 at t0
    double p1_t0 = 0.0;
};

inline bool solvability_threshold(double r0, double t0, const SolvabilityData& d) {
    double lhs = d.g10 * std::pow(std::exp(-(d.a0_lambda1 + d.b1_bar) * t0) * r0, d.p1_t0);
    double rhs = d.a0_lambda1 + d.b10_t0;
    return lhs < rhs;
}

/// Equality versions of the two-sided comparison problems for y = ||u||^2:
///   (1/2) y' = -(cA l1 + cB) y + cG y^{p1(t)/2 + 1},
/// lower envelope with (A0, B1, g0), upper with (a0, b1, G0).
struct EnvelopeOptions {
    double rtol = 1e-9;
    double atol = 1e-14;
    double guard = 1e12;
    double cadence = 0.01;
    double singular_time_tol = 1e-6;
};

struct EnvelopeTrajectory {
    std::vector<double> t;
    std::vector<double> y_low;
    std::vector<double> y_up;
    bool low_blowup = false;
    bool up_blowup = false;
    double t_singular_low = 0.0; // valid when the flag is set
    double t_singular_up = 0.0;
};

namespace detail {

struct EnvelopeRun {
    std::vector<double> y;
    bool blown = false;
    double t_singular = 0.0;
};

inline EnvelopeRun integrate_one_envelope(double y_t1, double t1, double rate,
                                          double growth, const ExponentSchedule& sched,
                                          const std::vector<double>& grid,
                                          const EnvelopeOptions& opt) {
    OdeRhs rhs = [&](double t, const Vec& y, Vec& dy) {
        double yy = std::max(y[0], 0.0);
        dy[0] = -2.0 * rate * y[0] + 2.0 * growth * std::pow(yy, 0.5 * sched.p1(t) + 1.0);
    };
    Guard guard{[](double, const Vec& y) { return y[0]; }, opt.guard};
    OdeOptions oo;
    oo.rtol = opt.rtol;
    oo.atol = opt.atol;
    oo.guard_time_tol = opt.singular_time_tol;

    EnvelopeRun run;
    run.y.assign(grid.size(), std::numeric_limits<double>::infinity());
    Vec y{y_t1};
    run.y[0] = y_t1;
    double t = t1;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        OdeResult res = integrate(rhs, y, t, grid[i], oo, &guard);
        if (res.reason == StopReason::GuardTripped) {
            run.blown = true;
            run.t_singular = res.t;
            break;
        }
        if (res.reason == StopReason::StepUnderflow) {
            // steep exponents exhaust the time resolution before the guard;
            // accept the underflow time as the singularity when the local
            // growth rate proves the asymptote is inside the tolerance
            Vec dy{0.0};
            rhs(res.t, y, dy);
            double mu = dy[0] / std::max(y[0], 1e-300);
            double p_now = std::max(0.5 * sched.p1(res.t), 0.25);
            if (mu > 0.0 && 1.0 / (2.0 * p_now * mu) < opt.singular_time_tol) {
                run.blown = true;
                run.t_singular = res.t;
                break;
            }
            throw IntegratorError("envelope: step size underflow at t = " +
                                  std::to_string(res.t));
        }
        t = grid[i];
        run.y[i] = y[0];
    }
    return run;
}

} // namespace detail

inline EnvelopeTrajectory integrate_envelopes(double y_t1, double t1,
                                              const EnergyParams& p, double horizon,
                                              const EnvelopeOptions& opt = {}) {
    if (y_t1 <= 0.0) throw std::invalid_argument("integrate_envelopes: y(t1) > 0 required");
    if (!p.schedule) throw std::invalid_argument("integrate_envelopes: schedule missing");
    EnvelopeTrajectory traj;
    const long n_out = std::max(1L, std::lround((horizon - t1) / opt.cadence));
    for (long i = 0; i <= n_out; ++i)
        traj.t.push_back(t1 + (horizon - t1) * double(i) / double(n_out));

    auto low = detail::integrate_one_envelope(y_t1, t1, p.A0 * p.lambda1 + p.B1, p.g0,
                                              *p.schedule, traj.t, opt);
    auto up = detail::integrate_one_envelope(y_t1, t1, p.a0 * p.lambda1 + p.b1, p.G0,
                                             *p.schedule, traj.t, opt);
    traj.y_low = std::move(low.y);
    traj.y_up = std::move(up.y);
    traj.low_blowup = low.blown;
    traj.up_blowup = up.blown;
    traj.t_singular_low = low.t_singular;
    traj.t_singular_up = up.t_singular;
    return traj;
}

inline void write_envelope_csv(std::ostream& os, const EnvelopeTrajectory& traj) {
    os << "t,y_low,y_up,low_singular,up_singular\n";
    char buf[400];
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        int low_gone = traj.low_blowup && !std::isfinite(traj.y_low[i]) ? 1 : 0;
        int up_gone = traj.up_blowup && !std::isfinite(traj.y_up[i]) ? 1 : 0;
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%d,%d\n", traj.t[i],
                      traj.y_low[i], traj.y_up[i], low_gone, up_gone);
        os << buf;
    }
}

} // namespace nlrd
