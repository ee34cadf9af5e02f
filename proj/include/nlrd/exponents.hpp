#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "nlrd/errors.hpp"

namespace nlrd {

/// One exponent as a named parametric family with closed-form derivative
/// and antiderivative (antiderivative normalized to 0 at t = 0).
class ExponentFunction {
public:
    enum class Family {
        Constant,    // c
        ExpRelax,    // amp * e^{-rate t}            (nonincreasing, never 0)
        LinearClamp, // max(0, amp - rate t)         (nonincreasing, hits 0)
        Zero,        // 0
        Saturate,    // amp * (1 - e^{-rate t})      (nondecreasing)
        Linear,      // c + rate t                   (nondecreasing for rate >= 0)
        Piecewise    // linear interpolation of knots, constant extension
    };

    static ExponentFunction constant(double c) { return {Family::Constant, c, 0.0}; }
    static ExponentFunction exp_relax(double amp, double rate) {
        return {Family::ExpRelax, amp, rate};
    }
    static ExponentFunction linear_clamp(double amp, double rate) {
        return {Family::LinearClamp, amp, rate};
    }
    static ExponentFunction zero() { return {Family::Zero, 0.0, 0.0}; }
    static ExponentFunction saturate(double amp, double rate) {
        return {Family::Saturate, amp, rate};
    }
    static ExponentFunction linear(double c, double rate) {
        return {Family::Linear, c, rate};
    }
    static ExponentFunction piecewise(std::vector<double> knots_t, std::vector<double> knots_v) {
        if (knots_t.size() != knots_v.size() || knots_t.size() < 2)
            throw ConfigError("exponent: piecewise needs matching knot lists, >= 2 knots");
        for (std::size_t i = 1; i < knots_t.size(); ++i)
            if (knots_t[i] <= knots_t[i - 1])
                throw ConfigError("exponent: piecewise knot times must increase");
        ExponentFunction f{Family::Piecewise, 0.0, 0.0};
        f.kt_ = std::move(knots_t);
        f.kv_ = std::move(knots_v);
        return f;
    }

    double value(double t) const {
        switch (family_) {
        case Family::Constant: return c_;
        case Family::ExpRelax: return c_ * std::exp(-rate_ * t);
        case Family::LinearClamp: return std::max(0.0, c_ - rate_ * t);
        case Family::Zero: return 0.0;
        case Family::Saturate: return c_ * (1.0 - std::exp(-rate_ * t));
        case Family::Linear: return c_ + rate_ * t;
        case Family::Piecewise: return pw_value(t);
        }
        return 0.0;
    }

    double derivative(double t) const {
        switch (family_) {
        case Family::Constant: return 0.0;
        case Family::ExpRelax: return -c_ * rate_ * std::exp(-rate_ * t);
        case Family::LinearClamp: return (c_ - rate_ * t > 0.0) ? -rate_ : 0.0;
        case Family::Zero: return 0.0;
        case Family::Saturate: return c_ * rate_ * std::exp(-rate_ * t);
        case Family::Linear: return rate_;
        case Family::Piecewise: return pw_slope(t);
        }
        return 0.0;
    }

    /// Integral from 0 to t, closed form for every family.
    double antiderivative(double t) const {
        switch (family_) {
        case Family::Constant: return c_ * t;
        case Family::ExpRelax:
            return rate_ == 0.0 ? c_ * t : c_ * (1.0 - std::exp(-rate_ * t)) / rate_;
        case Family::LinearClamp: {
            if (rate_ == 0.0) return c_ * t;
            double tz = c_ / rate_;
            if (t <= tz) return c_ * t - 0.5 * rate_ * t * t;
            return 0.5 * c_ * c_ / rate_;
        }
        case Family::Zero: return 0.0;
        case Family::Saturate:
            return rate_ == 0.0 ? 0.0 : c_ * (t - (1.0 - std::exp(-rate_ * t)) / rate_);
        case Family::Linear: return c_ * t + 0.5 * rate_ * t * t;
        case Family::Piecewise: return pw_integral(t);
        }
        return 0.0;
    }

    Family family() const { return family_; }

private:
    ExponentFunction(Family fam, double c, double rate) : family_(fam), c_(c), rate_(rate) {}

    double pw_value(double t) const {
        if (t <= kt_.front()) return kv_.front();
        if (t >= kt_.back()) return kv_.back();
        auto it = std::upper_bound(kt_.begin(), kt_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - kt_.begin());
        double w = (t - kt_[i - 1]) / (kt_[i] - kt_[i - 1]);
        return kv_[i - 1] + w * (kv_[i] - kv_[i - 1]);
    }

    double pw_slope(double t) const {
        if (t < kt_.front() || t >= kt_.back()) return 0.0;
        auto it = std::upper_bound(kt_.begin(), kt_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - kt_.begin());
        return (kv_[i] - kv_[i - 1]) / (kt_[i] - kt_[i - 1]);
    }

    double pw_integral(double t) const {
        double acc = 0.0;
        if (t <= kt_.front()) return kv_.front() * t;
        acc += kv_.front() * kt_.front(); // constant extension left of first knot
        double prev_t = kt_.front(), prev_v = kv_.front();
        for (std::size_t i = 1; i < kt_.size(); ++i) {
            if (t <= kt_[i]) {
                double v = pw_value(t);
                acc += 0.5 * (prev_v + v) * (t - prev_t);
                return acc;
            }
            acc += 0.5 * (prev_v + kv_[i]) * (kt_[i] - prev_t);
            prev_t = kt_[i];
            prev_v = kv_[i];
        }
        acc += prev_v * (t - prev_t); // constant extension right of last knot
        return acc;
    }

    Family family_;
    double c_, rate_;
    std::vector<double> kt_, kv_;
};

/// The pair p0(t) (nonincreasing, p0(0) = p - 1), p1(t) (nondecreasing,
/// p1 <= p - 1) with the switch times: t0 = inf{t : p1/p0 > 1} and
/// t1 = inf{t : p0 == 0}, either possibly infinite.
class ExponentSchedule {
public:
    static constexpr double kInfinite = std::numeric_limits<double>::infinity();

    ExponentSchedule(ExponentFunction p0, ExponentFunction p1, double p_total,
                     double validation_horizon)
        : p0_(p0), p1_(p1), p_total_(p_total) {
        if (p_total <= 0.0) throw ConfigError("exponents: p must be positive");
        if (validation_horizon <= 0.0)
            throw ConfigError("exponents: validation horizon must be positive");
        validate(validation_horizon);
        t1_ = compute_t1();
        t0_ = compute_t0(std::max(validation_horizon,
                                  std::isfinite(t1_) ? t1_ + 1.0 : validation_horizon));
        if (std::isfinite(t0_) && std::isfinite(t1_) && t0_ > t1_ + 1e-9)
            throw ConfigError("exponents: t0 > t1 (p1 must overtake p0 before p0 hits 0)");
    }

    double p0(double t) const { return p0_.value(t); }
    double p1(double t) const { return p1_.value(t); }
    double p1_prime(double t) const { return p1_.derivative(t); }
    /// P1(t) with P1' = p1 and P1(0) = 0.
    double P1(double t) const { return p1_.antiderivative(t); }
    double p_total() const { return p_total_; }
    double t0() const { return t0_; }
    double t1() const { return t1_; }
    const ExponentFunction& p0_function() const { return p0_; }
    const ExponentFunction& p1_function() const { return p1_; }

private:
    void validate(double horizon) const {
        const int n = 1000;
        const double cap = p_total_ - 1.0 + 1e-12;
        double prev0 = p0_.value(0.0), prev1 = p1_.value(0.0);
        if (p0_.family() != ExponentFunction::Family::Zero && p0_.value(0.0) != p_total_ - 1.0)
            throw ConfigError("exponents: p0(0) must equal p - 1");
        for (int i = 0; i <= n; ++i) {
            double t = horizon * i / n;
            double v0 = p0_.value(t), v1 = p1_.value(t);
            if (v0 < 0.0 || v1 < 0.0) throw ConfigError("exponents: p0, p1 must be >= 0");
            if (v0 > prev0 + 1e-12) throw ConfigError("exponents: p0 must be nonincreasing");
            if (v1 < prev1 - 1e-12) throw ConfigError("exponents: p1 must be nondecreasing");
            if (v1 > cap) throw ConfigError("exponents: p1 must stay <= p - 1");
            prev0 = v0;
            prev1 = v1;
        }
    }

    double compute_t1() const {
        using F = ExponentFunction::Family;
        switch (p0_.family()) {
        case F::Zero: return 0.0;
        case F::Constant: return p0_.value(0.0) == 0.0 ? 0.0 : kInfinite;
        case F::ExpRelax: return kInfinite;
        case F::LinearClamp: {
            // value(0) / rate, infinite for rate 0
            double v0 = p0_.value(0.0);
            double slope = -p0_.derivative(0.0);
            return slope > 0.0 ? v0 / slope : kInfinite;
        }
        default: break;
        }
        // generic scan + bisection on the nonincreasing p0
        double hi = 1.0;
        while (p0_.value(hi) > 0.0 && hi < 1e9) hi *= 2.0;
        if (p0_.value(hi) > 0.0) return kInfinite;
        double lo = 0.0;
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            (p0_.value(mid) > 0.0 ? lo : hi) = mid;
        }
        return hi;
    }

    double compute_t0(double search_horizon) const {
        auto d = [&](double t) { return p1_.value(t) - p0_.value(t); };
        if (d(0.0) > 0.0) return 0.0;
        // d is nondecreasing; locate the first grid cell where it turns positive.
        const int n = 4096;
        double lo = 0.0, hi = -1.0;
        for (int i = 1; i <= n; ++i) {
            double t = search_horizon * i / n;
            if (d(t) > 0.0) {
                hi = t;
                break;
            }
            lo = t;
        }
        if (hi < 0.0) return kInfinite;
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            (d(mid) > 0.0 ? hi : lo) = mid;
        }
        return hi;
    }

    ExponentFunction p0_, p1_;
    double p_total_;
    double t0_ = kInfinite, t1_ = kInfinite;
};

} // namespace nlrd
