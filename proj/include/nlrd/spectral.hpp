#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlrd/domain.hpp"
#include "nlrd/errors.hpp"
#include "nlrd/exponents.hpp"
#include "nlrd/ode.hpp"
#include "nlrd/regimes.hpp"
#include "nlrd/rng.hpp"
#include "nlrd/scenario.hpp"

namespace nlrd {

/// Spatial mean with a multiplicative time factor, e.g. f_hat(t).
struct TimeCoefficient {
    double scale = 0.0;
    TimeFactor factor = TimeFactor::constant(1.0);

    double at(double t) const { return scale * factor.eval(t); }
    static TimeCoefficient constant(double v) { return {v, TimeFactor::constant(1.0)}; }
};

/// Mean-value coefficients of the averaged problem: a_hat, b_hat constants,
/// f_hat(t), g_hat(t) separable means.
struct AveragedCoefficients {
    double a_hat = 1.0;
    double b_hat = 0.0;
    TimeCoefficient f_hat;
    TimeCoefficient g_hat;

    static AveragedCoefficients from(const Scenario& sc, int nodes = 256) {
        AveragedCoefficients ac;
        const auto& dom = sc.domain;
        ac.a_hat = mean_coefficient([&](Point p) { return sc.coeffs.a.eval(dom, p); }, dom, nodes);
        ac.b_hat = mean_coefficient([&](Point p) { return sc.coeffs.b.eval(dom, p); }, dom, nodes);
        ac.f_hat = {mean_coefficient([&](Point p) { return sc.coeffs.f.space.eval(dom, p); },
                                     dom, nodes),
                    sc.coeffs.f.time};
        ac.g_hat = {mean_coefficient([&](Point p) { return sc.coeffs.g.space.eval(dom, p); },
                                     dom, nodes),
                    sc.coeffs.g.time};
        return ac;
    }
};

/// Damping offset shared by the mode equations and the k0 threshold:
/// b_hat + f_hat(t) r^{p0(t)}. Equals the b_hat(t) = b_hat + f_hat(t) of
/// the degenerate phase, where p0 = 0.
inline double damping_offset(const AveragedCoefficients& ac, const ExponentSchedule& sched,
                             double t, double r) {
    double off = ac.b_hat;
    double fh = ac.f_hat.at(t);
    if (fh != 0.0) off += fh * std::pow(r, sched.p0(t));
    return off;
}

/// Time stamp plus truncated eigenmode coefficients, with the L2 and H10
/// norms cached at construction.
struct ModalState {
    double t = 0.0;
    std::vector<double> u;
    double r = 0.0;
    double h1 = 0.0;

    static ModalState make(double t, std::vector<double> u, const SpectralDomain& dom) {
        ModalState s;
        s.t = t;
        s.u = std::move(u);
        double l2 = 0.0, h1 = 0.0;
        for (std::size_t k = 0; k < s.u.size(); ++k) {
            l2 += s.u[k] * s.u[k];
            h1 += dom.eigenvalue(static_cast<int>(k) + 1) * s.u[k] * s.u[k];
        }
        s.r = std::sqrt(l2);
        s.h1 = std::sqrt(h1);
        return s;
    }
};

/// k0 = inf{k : a_hat lambda_k + b_hat(t) > g_hat(t) r^{p1(t)}}; returns the
/// N+1 sentinel (with a truncation warning) when no truncated mode
/// satisfies it. A tie within 1e-12 marks the boundary case: it is flagged
/// and skipped by strictness.
struct K0Result {
    int k0 = 1;
    bool equality = false;
    bool truncated = false;
};

inline K0Result compute_k0(double t, double r, const SpectralDomain& dom,
                           const AveragedCoefficients& ac, const ExponentSchedule& sched) {
    if (r < 0.0) throw std::invalid_argument("compute_k0: r >= 0 required");
    K0Result res;
    const double thr = ac.g_hat.at(t) * std::pow(r, sched.p1(t));
    const double off = damping_offset(ac, sched, t, r);
    for (int k = 1; k <= dom.mode_count(); ++k) {
        double lhs = ac.a_hat * dom.eigenvalue(k) + off;
        double tol = 1e-12 * std::max({1.0, std::abs(lhs), std::abs(thr)});
        if (std::abs(lhs - thr) <= tol) {
            res.equality = true;
            continue;
        }
        if (lhs > thr) {
            res.k0 = k;
            return res;
        }
    }
    res.k0 = dom.mode_count() + 1;
    res.truncated = true;
    return res;
}

/// rho(t) = a_hat lambda_{k0} + b_hat(t) - g_hat(t) r^{p1(t)}.
inline double rho_value(double t, double r, int k0, const SpectralDomain& dom,
                        const AveragedCoefficients& ac, const ExponentSchedule& sched) {
    return ac.a_hat * dom.eigenvalue(k0) + damping_offset(ac, sched, t, r) -
           ac.g_hat.at(t) * std::pow(r, sched.p1(t));
}

/// Orthogonal P/Q split at threshold index k0: P spans modes k <= k0-1,
/// Q spans k >= k0. Norms in both L2 and H10; lambda_{j0} is the smallest
/// eigenvalue among nonzero low modes (absent when the P part vanishes).
struct SplitReport {
    int k0 = 1;
    double p_l2 = 0.0, q_l2 = 0.0;
    double p_h1 = 0.0, q_h1 = 0.0;
    std::optional<double> lambda_j0;
    double rho = std::numeric_limits<double>::quiet_NaN();
};

inline SplitReport split_projection(const ModalState& state, const SpectralDomain& dom,
                                    int k0) {
    if (k0 < 1 || k0 > dom.mode_count() + 1)
        throw std::invalid_argument("split_projection: k0 out of range");
    SplitReport rep;
    rep.k0 = k0;
    double p2 = 0.0, q2 = 0.0, ph = 0.0, qh = 0.0;
    for (int k = 1; k <= static_cast<int>(state.u.size()); ++k) {
        double c = state.u[k - 1];
        double lam = dom.eigenvalue(k);
        if (k <= k0 - 1) {
            p2 += c * c;
            ph += lam * c * c;
            if (c != 0.0 && !rep.lambda_j0) rep.lambda_j0 = lam;
        } else {
            q2 += c * c;
            qh += lam * c * c;
        }
    }
    rep.p_l2 = std::sqrt(p2);
    rep.q_l2 = std::sqrt(q2);
    rep.p_h1 = std::sqrt(ph);
    rep.q_h1 = std::sqrt(qh);
    return rep;
}

inline SplitReport split_report(const ModalState& state, const SpectralDomain& dom,
                                const AveragedCoefficients& ac,
                                const ExponentSchedule& sched) {
    K0Result k0 = compute_k0(state.t, state.r, dom, ac, sched);
    SplitReport rep = split_projection(state, dom, k0.k0);
    rep.rho = rho_value(state.t, state.r, k0.k0, dom, ac, sched);
    return rep;
}

// ---------------------------------------------------------------------------
// Trajectory integration
// ---------------------------------------------------------------------------

struct RunOptions {
    double t_start = 0.0;
    double horizon = 10.0;
    double rtol = 1e-9;
    double atol = 1e-12;
    double cadence = 0.01;
    double guard = 1e6; // on r
    bool record_modes = true;
};

inline RunOptions run_options_from(const Scenario& sc) {
    RunOptions ro;
    ro.horizon = sc.solver.horizon;
    ro.rtol = sc.solver.rtol;
    ro.atol = sc.solver.atol;
    ro.cadence = sc.solver.cadence;
    ro.guard = sc.solver.guard;
    return ro;
}

struct Sample {
    double t = 0.0;
    double r = 0.0;
    double h1 = 0.0;
    int k0 = 1;
    bool k0_equality = false;
    double p_l2 = 0.0, q_l2 = 0.0, p_h1 = 0.0, q_h1 = 0.0;
    double rho = 0.0;
    double p0 = 0.0, p1 = 0.0;
    PhaseTag phase = PhaseTag::Dissipative;
    double w_acc = 0.0; // int g_hat r^{p1}
    double v_acc = 0.0; // int f_hat r^{p0}
    std::vector<double> u;
};

struct K0Switch {
    double t = 0.0;
    int from = 0, to = 0;
};

struct TrajectoryRecord {
    std::vector<Sample> samples;
    bool blown = false;
    double t_blowup = 0.0;
    std::vector<K0Switch> k0_switches;
    bool tail_warning = false;
    long total_steps = 0;
};

namespace detail {

/// PDE-consistent averaged mode system with two auxiliary accumulators:
///   u_k' = -(a_hat l_k + b_hat + f_hat r^{p0} - g_hat r^{p1}) u_k
///   w'   = g_hat r^{p1},   v' = f_hat r^{p0}
struct ModalRhs {
    const SpectralDomain& dom;
    const AveragedCoefficients& ac;
    const ExponentSchedule& sched;
    int n;

    void operator()(double t, const Vec& y, Vec& dy) const {
        double l2 = 0.0;
        for (int k = 0; k < n; ++k) l2 += y[k] * y[k];
        double r = std::sqrt(l2);
        double growth = ac.g_hat.at(t) * std::pow(r, sched.p1(t));
        double fterm = 0.0;
        double fh = ac.f_hat.at(t);
        if (fh != 0.0) fterm = fh * std::pow(r, sched.p0(t));
        double off = ac.b_hat + fterm - growth;
        for (int k = 0; k < n; ++k)
            dy[k] = -(ac.a_hat * dom.eigenvalue(k + 1) + off) * y[k];
        dy[n] = growth;
        dy[n + 1] = fterm;
    }
};

inline Sample make_sample(double t, const Vec& y, int n, const SpectralDomain& dom,
                          const AveragedCoefficients& ac, const ExponentSchedule& sched,
                          bool record_modes) {
    ModalState st = ModalState::make(t, std::vector<double>(y.begin(), y.begin() + n), dom);
    K0Result k0 = compute_k0(t, st.r, dom, ac, sched);
    SplitReport rep = split_projection(st, dom, k0.k0);
    Sample s;
    s.t = t;
    s.r = st.r;
    s.h1 = st.h1;
    s.k0 = k0.k0;
    s.k0_equality = k0.equality;
    s.p_l2 = rep.p_l2;
    s.q_l2 = rep.q_l2;
    s.p_h1 = rep.p_h1;
    s.q_h1 = rep.q_h1;
    s.rho = rho_value(t, st.r, k0.k0, dom, ac, sched);
    s.p0 = sched.p0(t);
    s.p1 = sched.p1(t);
    s.phase = classify_phase(t, sched);
    s.w_acc = y[n];
    s.v_acc = y[n + 1];
    if (record_modes) s.u = std::move(st.u);
    return s;
}

} // namespace detail

/// Integrate the averaged mode system from u0 at t_start to the horizon,
/// recording at the output cadence. Blow-up guard on r with bisection
/// refinement of the trip time; step underflow raises IntegratorError.
inline TrajectoryRecord run_modal(const SpectralDomain& dom, const AveragedCoefficients& ac,
                                  const ExponentSchedule& sched, std::vector<double> u0,
                                  const RunOptions& ro) {
    const int n = static_cast<int>(u0.size());
    if (n < 1 || n > dom.mode_count())
        throw std::invalid_argument("run_modal: mode vector size must be in [1, N]");
    detail::ModalRhs rhs{dom, ac, sched, n};
    OdeRhs rhs_fn = [&rhs](double t, const Vec& y, Vec& dy) { rhs(t, y, dy); };
    Guard guard{[n](double, const Vec& y) {
                    double l2 = 0.0;
                    for (int k = 0; k < n; ++k) l2 += y[k] * y[k];
                    return std::sqrt(l2);
                },
                ro.guard};
    OdeOptions oo;
    oo.rtol = ro.rtol;
    oo.atol = ro.atol;

    Vec y(u0.begin(), u0.end());
    y.push_back(0.0); // w accumulator
    y.push_back(0.0); // v accumulator

    TrajectoryRecord rec;
    rec.samples.push_back(detail::make_sample(ro.t_start, y, n, dom, ac, sched, ro.record_modes));

    double t = ro.t_start;
    const long n_out = std::max(1L, std::lround((ro.horizon - ro.t_start) / ro.cadence));
    for (long i = 1; i <= n_out; ++i) {
        double t_next = (i == n_out) ? ro.horizon
                                     : ro.t_start + (ro.horizon - ro.t_start) * double(i) / double(n_out);
        OdeResult res = integrate(rhs_fn, y, t, t_next, oo, &guard);
        rec.total_steps += res.n_steps;
        if (res.reason == StopReason::GuardTripped) {
            rec.blown = true;
            rec.t_blowup = res.t;
            break;
        }
        if (res.reason == StopReason::StepUnderflow) {
            // For steep exponents the step size can exhaust the double-
            // precision time resolution before r reaches the guard. When
            // the local growth rate mu = d(ln r)/dt puts the asymptote
            // within 1e-6 of the current time (remaining time for
            // y' = 2 mu y with mu ~ c y^p is 1/(2 p mu)), report blow-up
            // at the underflow time instead of failing.
            Vec dy(y.size(), 0.0);
            rhs_fn(res.t, y, dy);
            double l2 = 0.0, dot = 0.0;
            for (int k = 0; k < n; ++k) {
                l2 += y[k] * y[k];
                dot += y[k] * dy[k];
            }
            double mu = dot / std::max(l2, 1e-300);
            double p_now = std::max(0.5 * sched.p1(res.t), 0.25);
            if (mu > 0.0 && 1.0 / (2.0 * p_now * mu) < 1e-6) {
                rec.blown = true;
                rec.t_blowup = res.t;
                break;
            }
            throw IntegratorError("run_modal: step size underflow at t = " +
                                  std::to_string(res.t));
        }
        t = t_next;
        rec.samples.push_back(detail::make_sample(t, y, n, dom, ac, sched, ro.record_modes));
    }

    // k0 switch log and spectral-tail monitor
    for (std::size_t i = 1; i < rec.samples.size(); ++i)
        if (rec.samples[i].k0 != rec.samples[i - 1].k0)
            rec.k0_switches.push_back(
                {rec.samples[i].t, rec.samples[i - 1].k0, rec.samples[i].k0});
    if (n >= 10) {
        const int tail_from = static_cast<int>(std::ceil(0.9 * n));
        for (const Sample& s : rec.samples) {
            if (s.u.empty() || s.r == 0.0) continue;
            double tail = 0.0;
            for (int k = tail_from; k < n; ++k) tail += s.u[k] * s.u[k];
            if (tail > 1e-6 * s.r * s.r) {
                rec.tail_warning = true;
                break;
            }
        }
    }
    return rec;
}

/// One adaptive macro-step of length dt (state in, state out).
inline ModalState step_system(const ModalState& state, const SpectralDomain& dom,
                              const AveragedCoefficients& ac, const ExponentSchedule& sched,
                              double dt, double rtol = 1e-9, double atol = 1e-12,
                              double guard = 1e6) {
    RunOptions ro;
    ro.t_start = state.t;
    ro.horizon = state.t + dt;
    ro.rtol = rtol;
    ro.atol = atol;
    ro.cadence = dt;
    ro.guard = guard;
    TrajectoryRecord rec = run_modal(dom, ac, sched, state.u, ro);
    if (rec.blown)
        throw IntegratorError("step_system: blow-up guard tripped at t = " +
                              std::to_string(rec.t_blowup));
    const Sample& last = rec.samples.back();
    return ModalState::make(last.t, last.u, dom);
}

inline TrajectoryRecord run_scenario(const Scenario& sc) {
    AveragedCoefficients ac = AveragedCoefficients::from(sc, sc.solver.quad_nodes);
    return run_modal(sc.domain, ac, sc.schedule, initial_coefficients(sc),
                     run_options_from(sc));
}

// ---------------------------------------------------------------------------
// A-posteriori functionals
// ---------------------------------------------------------------------------

/// First-integral growth factor of mode k over [t_a, t_b]:
///   exp{-(a_hat l_k + b_hat)(t_b - t_a) - int f_hat r^{p0} + int g_hat r^{p1}},
/// evaluated from the recorded accumulators. t_a, t_b snap to recorded
/// sample times; outside the record -> std::out_of_range.
inline double mode_growth_factor(int k, double t_a, double t_b,
                                 const TrajectoryRecord& rec, const SpectralDomain& dom,
                                 const AveragedCoefficients& ac) {
    auto find = [&](double t) -> const Sample& {
        const Sample* best = nullptr;
        double best_gap = 1e300;
        for (const Sample& s : rec.samples) {
            double gap = std::abs(s.t - t);
            if (gap < best_gap) {
                best_gap = gap;
                best = &s;
            }
        }
        if (!best || best_gap > 1e-9 + 1e-9 * std::abs(t))
            throw std::out_of_range("mode_growth_factor: time not on the recorded grid");
        return *best;
    };
    const Sample& sa = find(t_a);
    const Sample& sb = find(t_b);
    double dt = sb.t - sa.t;
    double expo = -(ac.a_hat * dom.eigenvalue(k) + ac.b_hat) * dt -
                  (sb.v_acc - sa.v_acc) + (sb.w_acc - sa.w_acc);
    return std::exp(expo);
}

/// Max relative defect of (1/2) d(r^2)/dt = -a_hat h1^2 - b_hat r^2
/// - f_hat r^{p0+2} + g_hat r^{p1+2} along the recorded samples,
/// using 4th order central differences on the uniform cadence grid.
/// Stencils straddling the schedule switch times are skipped: r(t) is only
/// C^1 there and the finite difference loses its order.
inline double energy_identity_residual(const TrajectoryRecord& rec,
                                       const AveragedCoefficients& ac,
                                       const ExponentSchedule& sched) {
    const auto& s = rec.samples;
    if (s.size() < 5) throw std::invalid_argument("energy_identity_residual: need >= 5 samples");
    double max_rhs = 0.0;
    std::vector<double> rhs(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        double r = s[i].r;
        double t = s[i].t;
        double v = -ac.a_hat * s[i].h1 * s[i].h1 - ac.b_hat * r * r;
        double fh = ac.f_hat.at(t);
        if (fh != 0.0) v -= fh * std::pow(r, sched.p0(t)) * r * r;
        v += ac.g_hat.at(t) * std::pow(r, sched.p1(t)) * r * r;
        rhs[i] = v;
        max_rhs = std::max(max_rhs, std::abs(v));
    }
    const double floor = std::max(1e-12 * std::max(1.0, max_rhs), 1e-300);
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < s.size(); ++i) {
        double lo = s[i - 2].t, hi = s[i + 2].t;
        bool kink = false;
        for (double tk : {sched.t0(), sched.t1()})
            if (std::isfinite(tk) && tk > lo - 1e-12 && tk < hi + 1e-12) kink = true;
        if (kink) continue;
        double h = s[i + 1].t - s[i].t;
        auto y = [&](std::size_t j) { return s[j].r * s[j].r; };
        double dydt = (-y(i + 2) + 8.0 * y(i + 1) - 8.0 * y(i - 1) + y(i - 2)) / (12.0 * h);
        double lhs = 0.5 * dydt;
        double denom = std::max({std::abs(rhs[i]), std::abs(lhs), floor});
        worst = std::max(worst, std::abs(lhs - rhs[i]) / denom);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Long-time classification
// ---------------------------------------------------------------------------

enum class VerdictTag { GrowthUnbounded, DecayToZero, BoundedBand, BlowUp, Indeterminate };

inline const char* verdict_name(VerdictTag v) {
    switch (v) {
    case VerdictTag::GrowthUnbounded: return "growth-unbounded";
    case VerdictTag::DecayToZero: return "decay-to-zero";
    case VerdictTag::BoundedBand: return "bounded-band";
    case VerdictTag::BlowUp: return "blow-up";
    case VerdictTag::Indeterminate: return "indeterminate";
    }
    return "?";
}

struct TrajectoryVerdict {
    VerdictTag tag = VerdictTag::Indeterminate;
    double r_min_tail = 0.0; // BoundedBand R1
    double r_max_tail = 0.0; // BoundedBand R0
    double slope = 0.0;      // log r regression slope over the tail
    int k0_switch_count = 0;
    double t_blowup = 0.0;
};

/// Classify the run tail: BlowUp on a guard trip; sustained log-slope
/// >= 1e-3 -> GrowthUnbounded; r below 1e-8 or slope <= -1e-3 ->
/// DecayToZero; otherwise a measured BoundedBand when r stays positive.
inline TrajectoryVerdict classify_trajectory(const TrajectoryRecord& rec,
                                             double tail_window) {
    TrajectoryVerdict v;
    v.k0_switch_count = static_cast<int>(rec.k0_switches.size());
    if (rec.blown) {
        v.tag = VerdictTag::BlowUp;
        v.t_blowup = rec.t_blowup;
        return v;
    }
    if (rec.samples.size() < 2) throw std::out_of_range("classify_trajectory: empty run");
    const double t_end = rec.samples.back().t;
    const double t_begin = rec.samples.front().t;
    if (tail_window <= 0.0 || tail_window > t_end - t_begin)
        throw std::out_of_range("classify_trajectory: tail window outside the run");
    const double t_from = t_end - tail_window;

    double min_r = 1e300, max_r = -1e300;
    double sum_t = 0, sum_y = 0, sum_tt = 0, sum_ty = 0;
    long count = 0;
    bool has_zero = false, has_nan = false;
    for (const Sample& s : rec.samples) {
        if (s.t < t_from) continue;
        if (!std::isfinite(s.r)) has_nan = true;
        min_r = std::min(min_r, s.r);
        max_r = std::max(max_r, s.r);
        if (s.r <= 0.0) {
            has_zero = true;
            continue;
        }
        double ly = std::log(s.r);
        sum_t += s.t;
        sum_y += ly;
        sum_tt += s.t * s.t;
        sum_ty += s.t * ly;
        ++count;
    }
    v.r_min_tail = min_r;
    v.r_max_tail = max_r;
    if (!has_nan && rec.samples.back().r < 1e-8) {
        v.tag = VerdictTag::DecayToZero; // includes tails that underflowed to 0
        return v;
    }
    if (has_nan || count < 2) {
        v.tag = VerdictTag::Indeterminate;
        return v;
    }
    double denom = count * sum_tt - sum_t * sum_t;
    v.slope = denom != 0.0 ? (count * sum_ty - sum_t * sum_y) / denom : 0.0;

    if (v.slope <= -1e-3) {
        v.tag = VerdictTag::DecayToZero;
        return v;
    }
    if (v.slope >= 1e-3) {
        v.tag = VerdictTag::GrowthUnbounded;
        return v;
    }
    if (!has_zero && min_r > 0.0) {
        v.tag = VerdictTag::BoundedBand;
        return v;
    }
    v.tag = VerdictTag::Indeterminate;
    return v;
}

/// Band condition on the distance to H_{-k0}: with s = a_hat l_{k0} +
/// b_hat(t1), membership means eps*s <= ||P_{k0} u||_{H10} <= delta*s.
inline bool cone_membership(const ModalState& state, const SpectralDomain& dom, int k0,
                            double eps, double delta, const AveragedCoefficients& ac) {
    if (!(eps > 0.0) || eps >= delta)
        throw ConfigError("cone_membership: need 0 < eps < delta");
    SplitReport rep = split_projection(state, dom, k0);
    double s = ac.a_hat * dom.eigenvalue(k0) + ac.b_hat + ac.f_hat.at(state.t);
    return rep.p_h1 >= eps * s && rep.p_h1 <= delta * s;
}

// ---------------------------------------------------------------------------
// Twin-trajectory separation diagnostic (Benettin-style)
// ---------------------------------------------------------------------------

struct SeparationOptions {
    double eta = 1e-8;
    double renorm_dt = 0.05;
    double tail_fraction = 0.5; // slope fitted over the trailing fraction
    std::uint64_t seed = 1;
    double rtol = 1e-9;
    double atol = 1e-12;
    double guard = 1e6;
};

struct SeparationResult {
    double exponent = 0.0; // tail regression slope of the cumulative log gap
    double average = 0.0;  // total log gap growth / elapsed time
    bool truncated = false;
    double elapsed = 0.0;
    int checkpoints = 0;
};

/// Integrates the base trajectory and a perturbed twin (base + eta * random
/// unit vector) as one augmented system so both see identical step
/// sequences; the gap is renormalized to eta every renorm_dt.
inline SeparationResult separation_exponent(const SpectralDomain& dom,
                                            const AveragedCoefficients& ac,
                                            const ExponentSchedule& sched,
                                            const std::vector<double>& u0, double t_start,
                                            double horizon, const SeparationOptions& so) {
    if (so.eta <= 0.0) throw std::invalid_argument("separation_exponent: eta > 0 required");
    const int n = static_cast<int>(u0.size());
    SplitMix64 rng(so.seed);
    std::vector<double> dir(n);
    double norm = 0.0;
    do {
        for (double& d : dir) d = rng.gaussian();
        norm = 0.0;
        for (double d : dir) norm += d * d;
        norm = std::sqrt(norm);
    } while (norm == 0.0);

    Vec y(2 * n);
    for (int k = 0; k < n; ++k) {
        y[k] = u0[k];
        y[n + k] = u0[k] + so.eta * dir[k] / norm;
    }

    OdeRhs rhs = [&](double t, const Vec& yy, Vec& dy) {
        auto half = [&](int offset) {
            double l2 = 0.0;
            for (int k = 0; k < n; ++k) l2 += yy[offset + k] * yy[offset + k];
            double r = std::sqrt(l2);
            double growth = ac.g_hat.at(t) * std::pow(r, sched.p1(t));
            double fterm = 0.0;
            double fh = ac.f_hat.at(t);
            if (fh != 0.0) fterm = fh * std::pow(r, sched.p0(t));
            double off = ac.b_hat + fterm - growth;
            for (int k = 0; k < n; ++k)
                dy[offset + k] = -(ac.a_hat * dom.eigenvalue(k + 1) + off) * yy[offset + k];
        };
        half(0);
        half(n);
    };
    Guard guard{[n](double, const Vec& yy) {
                    double a = 0.0, b = 0.0;
                    for (int k = 0; k < n; ++k) {
                        a += yy[k] * yy[k];
                        b += yy[n + k] * yy[n + k];
                    }
                    return std::sqrt(std::max(a, b));
                },
                so.guard};
    OdeOptions oo;
    oo.rtol = so.rtol;
    oo.atol = so.atol;

    SeparationResult out;
    std::vector<double> ts, cum;
    double S = 0.0;
    double t = t_start;
    ts.push_back(t);
    cum.push_back(0.0);
    const long n_steps = std::max(2L, std::lround((horizon - t_start) / so.renorm_dt));
    for (long i = 1; i <= n_steps; ++i) {
        double t_next = t_start + (horizon - t_start) * double(i) / double(n_steps);
        OdeResult res = integrate(rhs, y, t, t_next, oo, &guard);
        if (res.reason == StopReason::GuardTripped) {
            out.truncated = true;
            break;
        }
        if (res.reason == StopReason::StepUnderflow)
            throw IntegratorError("separation_exponent: step underflow");
        t = t_next;
        double gap = 0.0;
        for (int k = 0; k < n; ++k) {
            double d = y[n + k] - y[k];
            gap += d * d;
        }
        gap = std::sqrt(gap);
        if (gap <= 0.0) {
            out.truncated = true; // twins coalesced below representable gap
            break;
        }
        S += std::log(gap / so.eta);
        ts.push_back(t);
        cum.push_back(S);
        double rescale = so.eta / gap;
        for (int k = 0; k < n; ++k) y[n + k] = y[k] + rescale * (y[n + k] - y[k]);
    }
    out.checkpoints = static_cast<int>(ts.size()) - 1;
    out.elapsed = ts.back() - t_start;
    if (out.elapsed > 0.0) out.average = S / out.elapsed;

    // tail regression
    double t_from = ts.back() - so.tail_fraction * out.elapsed;
    double sum_t = 0, sum_y = 0, sum_tt = 0, sum_ty = 0;
    long count = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < t_from) continue;
        sum_t += ts[i];
        sum_y += cum[i];
        sum_tt += ts[i] * ts[i];
        sum_ty += ts[i] * cum[i];
        ++count;
    }
    double denom = count * sum_tt - sum_t * sum_t;
    out.exponent = (count >= 2 && denom != 0.0)
                       ? (count * sum_ty - sum_t * sum_y) / denom
                       : out.average;
    return out;
}

} // namespace nlrd
