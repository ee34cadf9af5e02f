#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nlrd/ode.hpp"

using namespace nlrd;
using Catch::Approx;

TEST_CASE("rk45 reproduces exponential decay to tolerance") {
    OdeRhs rhs = [](double, const Vec& y, Vec& dy) { dy[0] = -3.0 * y[0]; };
    Vec y{1.0};
    OdeOptions opt;
    opt.rtol = 1e-10;
    opt.atol = 1e-14;
    OdeResult res = integrate(rhs, y, 0.0, 2.0, opt);
    CHECK(res.reason == StopReason::ReachedEnd);
    CHECK(y[0] == Approx(std::exp(-6.0)).epsilon(1e-9));
}

TEST_CASE("rk45 holds an exact equilibrium") {
    // y' = -2y + 2y^2 has the unstable fixed point y = 1, exactly representable
    OdeRhs rhs = [](double, const Vec& y, Vec& dy) { dy[0] = -2.0 * y[0] + 2.0 * y[0] * y[0]; };
    Vec y{1.0};
    OdeResult res = integrate(rhs, y, 0.0, 10.0, {});
    CHECK(res.reason == StopReason::ReachedEnd);
    CHECK(std::abs(y[0] - 1.0) < 1e-8);
}

TEST_CASE("guard trips on logistic blow-up and localizes the singular time") {
    // y' = -2y + 2y^2, y0 = 2: z = 1/y gives t* = (1/2) ln 2
    OdeRhs rhs = [](double, const Vec& y, Vec& dy) { dy[0] = -2.0 * y[0] + 2.0 * y[0] * y[0]; };
    Guard guard{[](double, const Vec& y) { return y[0]; }, 1e12};
    Vec y{2.0};
    OdeOptions opt;
    opt.guard_time_tol = 1e-9;
    OdeResult res = integrate(rhs, y, 0.0, 5.0, opt, &guard);
    REQUIRE(res.reason == StopReason::GuardTripped);
    CHECK(res.t == Approx(0.5 * std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("non-finite dynamics surface as step underflow") {
    OdeRhs rhs = [](double t, const Vec&, Vec& dy) {
        dy[0] = t > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
    };
    Vec y{0.0};
    OdeOptions opt;
    opt.max_steps = 100000;
    OdeResult res = integrate(rhs, y, 0.0, 1.0, opt);
    CHECK(res.reason == StopReason::StepUnderflow);
    CHECK(res.t <= 0.5 + 1e-9);
}

TEST_CASE("stiff linear system integrates accurately") {
    OdeRhs rhs = [](double, const Vec& y, Vec& dy) {
        dy[0] = -1.0 * y[0];
        dy[1] = -16.0 * y[1];
    };
    Vec y{1.0, 1.0};
    OdeOptions opt;
    opt.rtol = 1e-12;
    opt.atol = 1e-20;
    integrate(rhs, y, 0.0, 1.0, opt);
    CHECK(y[0] == Approx(std::exp(-1.0)).epsilon(1e-10));
    CHECK(y[1] == Approx(std::exp(-16.0)).epsilon(1e-9));
}
