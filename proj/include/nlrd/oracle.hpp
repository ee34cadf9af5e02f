#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "nlrd/errors.hpp"
#include "nlrd/scenario.hpp"
#include "nlrd/spectral.hpp"

namespace nlrd {

/// Uniform 1-D grid snapshot: n interior nodes at x_i = (i+1) h, Dirichlet
/// zero boundary values implied.
struct GridField {
    int n = 0;
    double h = 0.0;
    double length = 0.0;
    double t = 0.0;
    std::vector<double> u;

    double x(int i) const { return (i + 1) * h; }
    /// Trapezoid L2 norm (exact boundary zeros fold in for free).
    double norm() const {
        double s = 0.0;
        for (double v : u) s += v * v;
        return std::sqrt(h * s);
    }
};

/// Problem data for the method-of-lines solver, kept as plain separable
/// callables so test fixtures (e.g. the pure heat equation) do not need a
/// full validated scenario.
struct FdProblem {
    double length = M_PI;
    std::function<double(double)> a = [](double) { return 1.0; };
    std::function<double(double)> b = [](double) { return 0.0; };
    std::function<double(double)> f_space = [](double) { return 0.0; };
    std::function<double(double)> f_time = [](double) { return 1.0; };
    std::function<double(double)> g_space = [](double) { return 0.0; };
    std::function<double(double)> g_time = [](double) { return 1.0; };
    std::function<double(double)> p0 = [](double) { return 0.0; };
    std::function<double(double)> p1 = [](double) { return 0.0; };
    double guard = 1e6;
    double cfl_safety = 0.8;
};

inline FdProblem fd_problem_from(const Scenario& sc) {
    if (sc.domain.kind() != DomainKind::Interval)
        throw ConfigError("fd oracle: 1-D intervals only");
    FdProblem p;
    p.length = sc.domain.length();
    const SpectralDomain& dom = sc.domain;
    p.a = [&sc, &dom](double x) { return sc.coeffs.a.eval(dom, {x, 0.0}); };
    p.b = [&sc, &dom](double x) { return sc.coeffs.b.eval(dom, {x, 0.0}); };
    p.f_space = [&sc, &dom](double x) { return sc.coeffs.f.space.eval(dom, {x, 0.0}); };
    p.f_time = [&sc](double t) { return sc.coeffs.f.time.eval(t); };
    p.g_space = [&sc, &dom](double x) { return sc.coeffs.g.space.eval(dom, {x, 0.0}); };
    p.g_time = [&sc](double t) { return sc.coeffs.g.time.eval(t); };
    p.p0 = [&sc](double t) { return sc.schedule.p0(t); };
    p.p1 = [&sc](double t) { return sc.schedule.p1(t); };
    p.guard = sc.solver.guard;
    return p;
}

/// Initial nodal data matching what the spectral solver starts from:
/// the closed-form field when one is given, otherwise the eigenmode
/// reconstruction of the (possibly rescaled) coefficient vector.
inline std::function<double(double)> fd_initial_function(const Scenario& sc) {
    if (sc.initial.kind == InitialData::Kind::Field && sc.initial.field_form != "mode" &&
        sc.initial.scale_to_r0 == 0.0) {
        auto f2 = initial_field_function(sc);
        return [f2](double x) { return f2({x, 0.0}); };
    }
    auto coeffs = initial_coefficients(sc);
    const SpectralDomain& dom = sc.domain;
    return [coeffs, &dom](double x) {
        double s = 0.0;
        for (std::size_t k = 0; k < coeffs.size(); ++k)
            if (coeffs[k] != 0.0)
                s += coeffs[k] * dom.eigenfunction(static_cast<int>(k) + 1, {x, 0.0});
        return s;
    };
}

struct FdResult {
    std::vector<GridField> snapshots;
    bool blown = false;
    double t_blowup = 0.0;
};

/// Largest stable explicit step for the given problem and grid:
/// safety * h^2 / (2 max a).
inline double fd_cfl_limit(const FdProblem& p, int n) {
    const double h = p.length / (n + 1);
    double a_max = 0.0;
    for (int i = 0; i <= n; ++i) a_max = std::max(a_max, p.a((i + 0.5) * h));
    return p.cfl_safety * h * h / (2.0 * std::max(a_max, 1e-300));
}

namespace detail {

struct FdWorkspace {
    int n;
    double h;
    std::vector<double> a_half; // a at the n+1 half nodes
    std::vector<double> b_node, f_node, g_node;
    double a_max = 0.0;

    FdWorkspace(const FdProblem& p, int n_) : n(n_), h(p.length / (n_ + 1)) {
        a_half.resize(n + 1);
        for (int i = 0; i <= n; ++i) {
            a_half[i] = p.a((i + 0.5) * h);
            a_max = std::max(a_max, a_half[i]);
        }
        b_node.resize(n);
        f_node.resize(n);
        g_node.resize(n);
        for (int i = 0; i < n; ++i) {
            double x = (i + 1) * h;
            b_node[i] = p.b(x);
            f_node[i] = p.f_space(x);
            g_node[i] = p.g_space(x);
        }
    }

    void rhs(const FdProblem& p, double t, const std::vector<double>& u,
             std::vector<double>& du) const {
        double norm_sq = 0.0;
        for (double v : u) norm_sq += v * v;
        const double r = std::sqrt(h * norm_sq);
        const double ft = p.f_time(t);
        const double gt = p.g_time(t);
        const double rp0 = ft != 0.0 ? std::pow(r, p.p0(t)) : 0.0;
        const double rp1 = gt != 0.0 ? std::pow(r, p.p1(t)) : 0.0;
        const double inv_h2 = 1.0 / (h * h);
        for (int i = 0; i < n; ++i) {
            double left = i > 0 ? u[i - 1] : 0.0;
            double right = i + 1 < n ? u[i + 1] : 0.0;
            double diff = (a_half[i + 1] * (right - u[i]) - a_half[i] * (u[i] - left)) * inv_h2;
            du[i] = diff - b_node[i] * u[i] - f_node[i] * ft * rp0 * u[i] +
                    g_node[i] * gt * rp1 * u[i];
        }
    }
};

} // namespace detail

/// One explicit RK4 step of size dt. dt must respect the CFL bound;
/// violating it is a configuration error. An overflowing state is reported
/// through the blow-up event of the run-level driver; here it raises
/// IntegratorError.
inline GridField fd_step(const GridField& state, const FdProblem& p, double dt) {
    if (state.n < 8) throw ConfigError("fd oracle: need n >= 8 interior nodes");
    if (dt <= 0.0 || dt > fd_cfl_limit(p, state.n))
        throw ConfigError("fd oracle: dt violates the CFL bound");
    detail::FdWorkspace ws(p, state.n);
    const int n = state.n;
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    std::vector<double> u = state.u;
    double t = state.t;
    ws.rhs(p, t, u, k1);
    for (int i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k1[i];
    ws.rhs(p, t + 0.5 * dt, tmp, k2);
    for (int i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k2[i];
    ws.rhs(p, t + 0.5 * dt, tmp, k3);
    for (int i = 0; i < n; ++i) tmp[i] = u[i] + dt * k3[i];
    ws.rhs(p, t + dt, tmp, k4);
    GridField out = state;
    out.t = t + dt;
    for (int i = 0; i < n; ++i) {
        out.u[i] = u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!std::isfinite(out.u[i]))
            throw IntegratorError("fd_step: state overflowed at t = " + std::to_string(out.t));
    }
    return out;
}

/// Explicit RK4 method-of-lines run with CFL-limited steps
/// dt = safety * h^2 / (2 max a); snapshots land exactly on the requested
/// checkpoint times. Overflow of the trapezoid norm past the guard stops
/// the run and reports the blow-up time.
inline FdResult run_fd(const FdProblem& p, const std::function<double(double)>& u0, int n,
                       double t_start, const std::vector<double>& checkpoints) {
    if (n < 8) throw ConfigError("fd oracle: need n >= 8 interior nodes");
    detail::FdWorkspace ws(p, n);
    const double dt_cfl = fd_cfl_limit(p, n);

    std::vector<double> u(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (int i = 0; i < n; ++i) u[i] = u0((i + 1) * ws.h);

    FdResult out;
    double t = t_start;
    for (double target : checkpoints) {
        if (target < t) throw ConfigError("fd oracle: checkpoints must be increasing");
        while (t < target && !out.blown) {
            double dt = std::min(dt_cfl, target - t);
            ws.rhs(p, t, u, k1);
            for (int i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k1[i];
            ws.rhs(p, t + 0.5 * dt, tmp, k2);
            for (int i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k2[i];
            ws.rhs(p, t + 0.5 * dt, tmp, k3);
            for (int i = 0; i < n; ++i) tmp[i] = u[i] + dt * k3[i];
            ws.rhs(p, t + dt, tmp, k4);
            for (int i = 0; i < n; ++i)
                u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            t += dt;
            double norm_sq = 0.0;
            bool finite = true;
            for (double v : u) {
                if (!std::isfinite(v)) finite = false;
                norm_sq += v * v;
            }
            if (!finite || std::sqrt(ws.h * norm_sq) > p.guard) {
                out.blown = true;
                out.t_blowup = t;
            }
        }
        if (out.blown) break;
        GridField snap;
        snap.n = n;
        snap.h = ws.h;
        snap.length = p.length;
        snap.t = t;
        snap.u = u;
        out.snapshots.push_back(std::move(snap));
    }
    return out;
}

/// Spectral (averaged, N modes) vs finite-difference (full coefficients,
/// n nodes) comparison at checkpoint times. With x-constant coefficients
/// the averaging is exact and the gap is pure solver error; otherwise the
/// report is labeled as including the modeling (averaging) gap.
struct CompareEntry {
    double t = 0.0;
    double l2_diff = 0.0;
    double max_diff = 0.0;
};

struct CompareReport {
    std::vector<CompareEntry> entries;
    bool averaging_exact = true;
    bool spectral_blown = false;
    bool fd_blown = false;
    double spectral_t_blowup = 0.0;
    double fd_t_blowup = 0.0;
};

inline CompareReport compare_solvers(const Scenario& sc, int grid_n,
                                     const std::vector<double>& checkpoints) {
    CompareReport rep;
    rep.averaging_exact = sc.coeffs.a.form() == SpatialField::Form::Constant &&
                          sc.coeffs.b.form() == SpatialField::Form::Constant &&
                          sc.coeffs.f.space.form() == SpatialField::Form::Constant &&
                          sc.coeffs.g.space.form() == SpatialField::Form::Constant;

    FdProblem prob = fd_problem_from(sc);
    FdResult fd = run_fd(prob, fd_initial_function(sc), grid_n, 0.0, checkpoints);
    rep.fd_blown = fd.blown;
    rep.fd_t_blowup = fd.t_blowup;

    AveragedCoefficients ac = AveragedCoefficients::from(sc, sc.solver.quad_nodes);
    detail::ModalRhs rhs{sc.domain, ac, sc.schedule, sc.domain.mode_count()};
    OdeRhs rhs_fn = [&rhs](double t, const Vec& y, Vec& dy) { rhs(t, y, dy); };
    const int n_modes = sc.domain.mode_count();
    Guard guard{[n_modes](double, const Vec& y) {
                    double l2 = 0.0;
                    for (int k = 0; k < n_modes; ++k) l2 += y[k] * y[k];
                    return std::sqrt(l2);
                },
                sc.solver.guard};
    OdeOptions oo;
    oo.rtol = sc.solver.rtol;
    oo.atol = sc.solver.atol;
    auto u0 = initial_coefficients(sc);
    Vec y(u0.begin(), u0.end());
    y.push_back(0.0);
    y.push_back(0.0);

    double t = 0.0;
    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
        OdeResult res = integrate(rhs_fn, y, t, checkpoints[ci], oo, &guard);
        if (res.reason == StopReason::GuardTripped) {
            rep.spectral_blown = true;
            rep.spectral_t_blowup = res.t;
            break;
        }
        if (res.reason == StopReason::StepUnderflow)
            throw IntegratorError("compare_solvers: spectral step underflow");
        t = checkpoints[ci];
        if (ci >= fd.snapshots.size()) break;
        const GridField& snap = fd.snapshots[ci];
        CompareEntry e;
        e.t = t;
        double acc = 0.0;
        for (int i = 0; i < snap.n; ++i) {
            double xs = snap.x(i);
            double spec = 0.0;
            for (int k = 1; k <= n_modes; ++k)
                if (y[k - 1] != 0.0) spec += y[k - 1] * sc.domain.eigenfunction(k, {xs, 0.0});
            double d = spec - snap.u[i];
            acc += d * d;
            e.max_diff = std::max(e.max_diff, std::abs(d));
        }
        e.l2_diff = std::sqrt(snap.h * acc);
        rep.entries.push_back(e);
    }
    return rep;
}

} // namespace nlrd
