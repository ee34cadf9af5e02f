#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nlrd/domain.hpp"
#include "nlrd/errors.hpp"

namespace nlrd {

/// Named closed-form spatial field. Forms:
///   constant c          -> c
///   affine c0 c1 [c2]   -> c0 + c1*x (+ c2*y)
///   sine_bump c0 c1     -> c0 + c1*sin(pi x/Lx) [* sin(pi y/Ly)]
class SpatialField {
public:
    enum class Form { Constant, Affine, SineBump };

    static SpatialField constant(double c) { return {Form::Constant, {c}}; }
    static SpatialField affine(double c0, double c1, double c2 = 0.0) {
        return {Form::Affine, {c0, c1, c2}};
    }
    static SpatialField sine_bump(double c0, double c1) {
        return {Form::SineBump, {c0, c1}};
    }

    double eval(const SpectralDomain& dom, Point p) const {
        switch (form_) {
        case Form::Constant:
            return params_[0];
        case Form::Affine:
            return params_[0] + params_[1] * p.x + params_[2] * p.y;
        case Form::SineBump: {
            double s = std::sin(M_PI * p.x / dom.lx());
            if (dom.kind() == DomainKind::Rectangle) s *= std::sin(M_PI * p.y / dom.ly());
            return params_[0] + params_[1] * s;
        }
        }
        return 0.0;
    }

    Form form() const { return form_; }
    const std::vector<double>& params() const { return params_; }

private:
    SpatialField(Form f, std::vector<double> p) : form_(f), params_(std::move(p)) {
        params_.resize(3, 0.0);
    }
    Form form_;
    std::vector<double> params_;
};

/// Multiplicative time factor for the f, g coefficients. Forms:
///   constant c          -> c
///   relax v0 vinf rate  -> vinf + (v0 - vinf) e^{-rate t}
class TimeFactor {
public:
    enum class Form { Constant, Relax };

    static TimeFactor constant(double c) { return {Form::Constant, c, c, 0.0}; }
    static TimeFactor relax(double v0, double vinf, double rate) {
        if (rate < 0.0) throw ConfigError("time factor: relax rate must be >= 0");
        return {Form::Relax, v0, vinf, rate};
    }

    double eval(double t) const {
        if (form_ == Form::Constant) return v0_;
        return vinf_ + (v0_ - vinf_) * std::exp(-rate_ * t);
    }

    Form form() const { return form_; }
    double v0() const { return v0_; }
    double vinf() const { return vinf_; }
    double rate() const { return rate_; }

private:
    TimeFactor(Form f, double v0, double vinf, double rate)
        : form_(f), v0_(v0), vinf_(vinf), rate_(rate) {}
    Form form_;
    double v0_, vinf_, rate_;
};

/// Separable spatio-temporal field: space(x) * time(t).
struct SpaceTimeField {
    SpatialField space = SpatialField::constant(1.0);
    TimeFactor time = TimeFactor::constant(1.0);

    double eval(const SpectralDomain& dom, double t, Point p) const {
        return space.eval(dom, p) * time.eval(t);
    }
};

struct Bounds {
    double lo = 0.0;
    double hi = 0.0;
};

/// The equation's known functions a(x), b(x), f(t,x), g(t,x) with cached
/// bounds a0 <= a <= A0 etc, verified on a grid at construction.
/// a, b, f must be strictly positive; g >= 0 with b(x) > g(0,x).
class CoefficientSet {
public:
    SpatialField a = SpatialField::constant(1.0);
    SpatialField b = SpatialField::constant(1.0);
    SpaceTimeField f;
    SpaceTimeField g;
    Bounds a_bounds, b_bounds, f_bounds, g_bounds;

    /// check_b_above_g0: enforce the t = 0 condition b(x) > g(0,x). Waived
    /// for scenarios whose time origin is already the degenerate switch t1
    /// (the condition constrains the unmodeled pre-history there).
    static CoefficientSet make(const SpectralDomain& dom, SpatialField a, SpatialField b,
                               SpaceTimeField f, SpaceTimeField g, double horizon,
                               int space_grid = 1024, int time_grid = 256,
                               bool check_b_above_g0 = true) {
        CoefficientSet c;
        c.a = a;
        c.b = b;
        c.f = f;
        c.g = g;

        auto pts = dom.verification_grid(space_grid);
        c.a_bounds = spatial_bounds(dom, a, pts);
        c.b_bounds = spatial_bounds(dom, b, pts);
        if (c.a_bounds.lo <= 0.0) throw ConfigError("coefficients: a(x) must be strictly positive");
        if (c.b_bounds.lo <= 0.0) throw ConfigError("coefficients: b(x) must be strictly positive");

        c.f_bounds = spacetime_bounds(dom, f, pts, horizon, time_grid);
        c.g_bounds = spacetime_bounds(dom, g, pts, horizon, time_grid);
        if (c.f_bounds.lo <= 0.0) throw ConfigError("coefficients: f(t,x) must be strictly positive");
        if (c.g_bounds.lo < 0.0) throw ConfigError("coefficients: g(t,x) must be nonnegative");

        if (check_b_above_g0)
            for (const Point& p : pts)
                if (!(b.eval(dom, p) > g.eval(dom, 0.0, p)))
                    throw ConfigError("coefficients: b(x) > g(0,x) violated");
        return c;
    }

private:
    static Bounds spatial_bounds(const SpectralDomain& dom, const SpatialField& field,
                                 const std::vector<Point>& pts) {
        Bounds bd{1e300, -1e300};
        for (const Point& p : pts) {
            double v = field.eval(dom, p);
            bd.lo = std::min(bd.lo, v);
            bd.hi = std::max(bd.hi, v);
        }
        return bd;
    }

    static Bounds spacetime_bounds(const SpectralDomain& dom, const SpaceTimeField& field,
                                   const std::vector<Point>& pts, double horizon,
                                   int time_grid) {
        Bounds sp{1e300, -1e300};
        for (const Point& p : pts) {
            double v = field.space.eval(dom, p);
            sp.lo = std::min(sp.lo, v);
            sp.hi = std::max(sp.hi, v);
        }
        Bounds tf{1e300, -1e300};
        for (int i = 0; i <= time_grid; ++i) {
            double v = field.time.eval(horizon * i / time_grid);
            tf.lo = std::min(tf.lo, v);
            tf.hi = std::max(tf.hi, v);
        }
        // All factors are nonnegative for valid inputs, so products of the
        // extreme values bound the product field.
        std::vector<double> corners = {sp.lo * tf.lo, sp.lo * tf.hi, sp.hi * tf.lo,
                                       sp.hi * tf.hi};
        Bounds bd{corners[0], corners[0]};
        for (double v : corners) {
            bd.lo = std::min(bd.lo, v);
            bd.hi = std::max(bd.hi, v);
        }
        return bd;
    }
};

} // namespace nlrd
