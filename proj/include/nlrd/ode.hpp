#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "nlrd/errors.hpp"

namespace nlrd {

using Vec = std::vector<double>;
using OdeRhs = std::function<void(double, const Vec&, Vec&)>;

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double h_init = 0.0;  // 0 = heuristic
    double h_min = 1e-15; // absolute floor; the effective floor also tracks eps*|t|
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 20000000;
    double guard_time_tol = 1e-9; // absolute localization of a guard trip

    double h_floor(double t) const {
        return std::max(h_min, 8.0 * std::numeric_limits<double>::epsilon() * std::abs(t));
    }
};

/// Stop integration once value(t, y) exceeds threshold; the trip time is
/// then localized by repeatedly re-integrating from the last clean state
/// with a halved step-size cap.
struct Guard {
    std::function<double(double, const Vec&)> value;
    double threshold = 1e12;
};

enum class StopReason { ReachedEnd, GuardTripped, StepUnderflow };

struct OdeResult {
    StopReason reason = StopReason::ReachedEnd;
    double t = 0.0; // final time; guard-refined trip time when tripped
    long n_steps = 0;
    long n_rejected = 0;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

class Dopri5Stepper {
public:
    Dopri5Stepper(const OdeRhs& rhs, std::size_t n) : rhs_(rhs) {
        for (auto* k : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_}) k->assign(n, 0.0);
        tmp_.assign(n, 0.0);
        ynew_.assign(n, 0.0);
    }

    /// One trial step of size h from (t, y). On success fills ynew() and
    /// returns the scaled error norm. NaN anywhere yields +inf.
    double attempt(double t, const Vec& y, double h, double rtol, double atol,
                   bool fresh_k1) {
        using T = Dopri5;
        const std::size_t n = y.size();
        if (fresh_k1) rhs_(t, y, k1_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * T::a21 * k1_[i];
        rhs_(t + T::c2 * h, tmp_, k2_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = y[i] + h * (T::a31 * k1_[i] + T::a32 * k2_[i]);
        rhs_(t + T::c3 * h, tmp_, k3_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = y[i] + h * (T::a41 * k1_[i] + T::a42 * k2_[i] + T::a43 * k3_[i]);
        rhs_(t + T::c4 * h, tmp_, k4_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = y[i] + h * (T::a51 * k1_[i] + T::a52 * k2_[i] + T::a53 * k3_[i] +
                                  T::a54 * k4_[i]);
        rhs_(t + T::c5 * h, tmp_, k5_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = y[i] + h * (T::a61 * k1_[i] + T::a62 * k2_[i] + T::a63 * k3_[i] +
                                  T::a64 * k4_[i] + T::a65 * k5_[i]);
        rhs_(t + h, tmp_, k6_);
        for (std::size_t i = 0; i < n; ++i)
            ynew_[i] = y[i] + h * (T::b1 * k1_[i] + T::b3 * k3_[i] + T::b4 * k4_[i] +
                                   T::b5 * k5_[i] + T::b6 * k6_[i]);
        rhs_(t + h, ynew_, k7_); // FSAL
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = h * (T::e1 * k1_[i] + T::e3 * k3_[i] + T::e4 * k4_[i] +
                            T::e5 * k5_[i] + T::e6 * k6_[i] + T::e7 * k7_[i]);
            double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / std::max<std::size_t>(n, 1));
        if (!std::isfinite(err)) return std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
            if (!std::isfinite(ynew_[i])) return std::numeric_limits<double>::infinity();
        return err;
    }

    const Vec& ynew() const { return ynew_; }
    void commit_fsal() { k1_.swap(k7_); }

private:
    const OdeRhs& rhs_;
    Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_;
};

inline double initial_step(const OdeRhs& rhs, double t, const Vec& y, double span,
                           const OdeOptions& opt) {
    if (opt.h_init > 0.0) return std::min(opt.h_init, span);
    Vec dy(y.size(), 0.0);
    rhs(t, y, dy);
    double ny = 0.0, nf = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ny = std::max(ny, std::abs(y[i]));
        nf = std::max(nf, std::abs(dy[i]));
    }
    double h = (nf > 0.0) ? 0.01 * (ny + opt.atol) / nf : 1e-4 * span;
    return std::clamp(h, opt.h_floor(t) * 10, std::min(span, opt.h_max));
}

/// Core adaptive loop with an optional step-size cap; stops at t_end, on a
/// guard trip (state stays BEFORE the tripping step-refinement happens in
/// the caller), or on underflow.
inline OdeResult advance(const OdeRhs& rhs, Vec& y, double& t, double t_end,
                         const OdeOptions& opt, const Guard* guard, double h_cap,
                         double& h_carry, double* trip_t, Vec* trip_y) {
    Dopri5Stepper stepper(rhs, y.size());
    OdeResult res;
    double h = h_carry > 0.0 ? h_carry : initial_step(rhs, t, y, t_end - t, opt);
    h = std::min({h, h_cap, opt.h_max});
    bool fresh = true;
    while (t < t_end) {
        const double floor = opt.h_floor(t);
        if (t_end - t < floor) { // span below time resolution
            t = t_end;
            break;
        }
        h = std::min({h, t_end - t, h_cap, opt.h_max});
        if (h < floor) {
            res.reason = StopReason::StepUnderflow;
            res.t = t;
            return res;
        }
        double err = stepper.attempt(t, y, h, opt.rtol, opt.atol, fresh);
        ++res.n_steps;
        if (res.n_steps > opt.max_steps)
            throw IntegratorError("ode: step budget exhausted");
        if (err <= 1.0) {
            const Vec& ynew = stepper.ynew();
            if (guard && guard->value(t + h, ynew) > guard->threshold) {
                if (trip_t) *trip_t = t + h;
                if (trip_y) *trip_y = ynew;
                res.reason = StopReason::GuardTripped;
                res.t = t; // state before the tripping step
                h_carry = h;
                return res;
            }
            t += h;
            y = ynew;
            stepper.commit_fsal();
            fresh = false;
            double fac = (err == 0.0) ? 5.0
                                      : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h *= fac;
        } else {
            ++res.n_rejected;
            double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
            h *= fac;
            fresh = true; // k1 still valid at (t, y); cheap to keep, but attempt
                          // recomputes only when asked
        }
    }
    res.reason = StopReason::ReachedEnd;
    res.t = t;
    h_carry = h;
    return res;
}

} // namespace detail

/// Adaptive Dormand-Prince 5(4) over [t0, t1]. When a guard is supplied and
/// trips, the trip time is localized to opt.guard_time_tol by re-integrating
/// from the last clean state with successively halved step caps; y is left
/// at the last clean state and result.t is the refined trip time.
inline OdeResult integrate(const OdeRhs& rhs, Vec& y, double t0, double t1,
                           const OdeOptions& opt = {}, const Guard* guard = nullptr) {
    double t = t0;
    double h_carry = 0.0;
    double trip_t = 0.0;
    Vec trip_y;
    OdeResult res = detail::advance(rhs, y, t, t1, opt, guard, 1e300, h_carry, &trip_t,
                                    &trip_y);
    if (res.reason != StopReason::GuardTripped) return res;

    // Bisection on step size: halve the cap until the trip is bracketed
    // inside a window shorter than guard_time_tol.
    double cap = std::max(trip_t - t, opt.guard_time_tol);
    long total_steps = res.n_steps;
    while (cap > opt.guard_time_tol) {
        cap *= 0.5;
        double t_limit = trip_t;
        double hc = 0.0;
        OdeResult sub = detail::advance(rhs, y, t, t_limit, opt, guard, cap, hc, &trip_t,
                                        &trip_y);
        total_steps += sub.n_steps;
        if (sub.reason == StopReason::StepUnderflow) break;
        if (sub.reason == StopReason::ReachedEnd) {
            // guard no longer trips before the previous trip estimate; the
            // previous estimate stands
            break;
        }
    }
    res.reason = StopReason::GuardTripped;
    res.t = trip_t;
    res.n_steps = total_steps;
    return res;
}

} // namespace nlrd
