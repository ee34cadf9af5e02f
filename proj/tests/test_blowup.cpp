#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "nlrd/blowup.hpp"
#include "nlrd/rng.hpp"

using namespace nlrd;
using Catch::Approx;

namespace {

Scenario make_scenario(const std::string& text) {
    std::istringstream ss(text);
    IniDoc ini = IniDoc::parse(ss);
    return scenario_from_ini(ini);
}

const char* kDegenerateScenario = R"(
[domain]
kind = interval
length = 3.141592653589793
modes = 8
[coefficients]
a = constant 1.0
b = constant 1.5
f = constant 0.2
g = constant 1.0
[exponents]
p = 3.0
p0 = zero
p1 = constant 2.0
[initial]
kind = modes
values = 1.0
[solver]
horizon = 2.0
)";

ExponentSchedule degenerate_constant_p1(double p1, double p_total = 4.0) {
    return ExponentSchedule(ExponentFunction::zero(), ExponentFunction::constant(p1),
                            p_total, 50.0);
}

} // namespace

TEST_CASE("variable exponent derivative worked examples") {
    // q constant: power rule d/dt y^{-3} with y = 2, y' = 1
    CHECK(variable_exponent_derivative(2.0, 1.0, 3.0, 0.0) ==
          Approx(-0.1875).epsilon(1e-14));
    // y = e^t, q = t at t = 1: d/dt e^{-t^2} = -2 e^{-1}
    CHECK(variable_exponent_derivative(M_E, M_E, 1.0, 1.0) ==
          Approx(-2.0 / M_E).epsilon(1e-13));
    // constant function
    CHECK(variable_exponent_derivative(2.0, 0.0, 3.0, 0.0) == 0.0);
    CHECK_THROWS_AS(variable_exponent_derivative(-1.0, 0.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("variable exponent derivative agrees with central differences") {
    SplitMix64 rng(99);
    for (int rep = 0; rep < 100; ++rep) {
        double ya = rng.uniform(0.5, 3.0);
        double yb = rng.uniform(0.0, 0.4) * ya;
        double yc = rng.uniform(0.5, 3.0);
        double qd = rng.uniform(0.1, 2.0);
        double qe = rng.uniform(-0.5, 0.5);
        auto y = [&](double t) { return ya + yb * std::sin(yc * t); };
        auto yp = [&](double t) { return yb * yc * std::cos(yc * t); };
        auto q = [&](double t) { return qd + qe * std::sin(t); };
        auto qp = [&](double t) { return qe * std::cos(t); };
        double t = rng.uniform(0.0, 3.0);
        double h = 1e-5;
        auto F = [&](double s) { return std::pow(y(s), -q(s)); };
        double numeric = (F(t + h) - F(t - h)) / (2.0 * h);
        double analytic = variable_exponent_derivative(y(t), yp(t), q(t), qp(t));
        REQUIRE(analytic == Approx(numeric).epsilon(1e-6).margin(1e-10));
    }
}

TEST_CASE("log bound constants") {
    CHECK(log_bound_constant(1.0, 2.0, 0.0).epsilon == 0.0);
    CHECK(log_bound_constant(1.0, 2.0, 0.0).c == 0.0);
    LogBound lb = log_bound_constant(1.0, 2.0, 1.0);
    CHECK(lb.epsilon == Approx(0.25 / std::sqrt(2.0)).epsilon(1e-12)); // ~0.17678
    CHECK(lb.c == Approx(lb.epsilon * lb.epsilon / 2.0).epsilon(1e-12)); // 0.015625
    CHECK(lb.c == Approx(0.015625).epsilon(1e-12));
    CHECK_THROWS_AS(log_bound_constant(1.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(log_bound_constant(1.0, 0.5, 1.0), std::invalid_argument);

    // spot check: s = 4, p1 = 2, p1' = 1, b1 = 1
    double s = 4.0;
    double lhs = (1.0 / 4.0) * s * s * std::log(s * s);
    double rhs = 1.0 * s * s + lb.c * std::pow(s, 4.0);
    CHECK(lhs == Approx(11.09).epsilon(1e-3));
    CHECK(rhs == Approx(20.0).epsilon(1e-12));
    CHECK(lhs <= rhs);
}

TEST_CASE("log bound inequality holds over sampled tuples") {
    SplitMix64 rng(4242);
    long violations = 0;
    for (int rep = 0; rep < 100000; ++rep) {
        double p1 = rng.uniform(1.01, 5.0);
        double p1p = rng.uniform(0.0, 2.0);
        double b1 = rng.uniform(0.05, 3.0);
        double s = std::exp(rng.uniform(std::log(1e-3), std::log(1e3)));
        LogBound lb = log_bound_constant(b1, p1, p1p);
        double lhs = (p1p / (2.0 * p1)) * s * s * std::log(s * s);
        double rhs = b1 * s * s + lb.c * std::pow(s, p1 + 2.0);
        if (lhs > rhs * (1.0 + 1e-12) + 1e-300) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("blow-up criterion single-mode algebra") {
    Scenario sc = make_scenario(kDegenerateScenario);
    const int n = sc.domain.mode_count();
    // u = s w1, a = g = 1, p1 = 2: delta = s^2 (1 - s^2)
    std::vector<double> u(n, 0.0);
    u[0] = 2.0;
    CriterionResult crit = blowup_criterion(u, 0.0, sc);
    CHECK(crit.delta == Approx(-12.0).epsilon(1e-9));
    CHECK(crit.blowup);

    u[0] = 0.5;
    crit = blowup_criterion(u, 0.0, sc);
    CHECK(crit.delta == Approx(0.25 * 0.75).epsilon(1e-9));
    CHECK_FALSE(crit.blowup);
}

TEST_CASE("blow-up criterion requires the degenerate phase") {
    Scenario sc = make_scenario(R"(
[domain]
kind = interval
length = 3.141592653589793
modes = 4
[coefficients]
a = constant 1.0
b = constant 1.5
f = constant 0.2
g = constant 1.0
[exponents]
p = 3.0
p0 = exp_relax 0.5
p1 = constant 1.0
[initial]
kind = modes
values = 1.0
[solver]
horizon = 2.0
)");
    std::vector<double> u(4, 0.0);
    u[0] = 1.0;
    CHECK_THROWS_AS(blowup_criterion(u, 0.0, sc), PhaseError);
}

TEST_CASE("blow-up criterion mixture against a dense-grid oracle") {
    Scenario sc = make_scenario(R"(
[domain]
kind = interval
length = 3.141592653589793
modes = 8
[coefficients]
a = affine 1.0 1.0
b = constant 1.5
f = constant 0.2
g = constant 1.0
[exponents]
p = 3.0
p0 = zero
p1 = constant 2.0
[initial]
kind = modes
values = 1.0
[solver]
horizon = 2.0
)");
    const auto& dom = sc.domain;
    std::vector<double> u(8, 0.0);
    u[0] = 1.3;
    u[1] = -0.6;
    CriterionResult crit = blowup_criterion(u, 0.0, sc);

    // 10^4-point trapezoid oracle
    const int m = 10000;
    const double h = M_PI / m;
    double grad_term = 0.0, mass_term = 0.0;
    for (int i = 0; i <= m; ++i) {
        double x = i * h;
        double w = (i == 0 || i == m) ? 0.5 : 1.0;
        double du = u[0] * dom.eigenfunction_grad(1, {x, 0.0}).x +
                    u[1] * dom.eigenfunction_grad(2, {x, 0.0}).x;
        double val = u[0] * dom.eigenfunction(1, {x, 0.0}) +
                     u[1] * dom.eigenfunction(2, {x, 0.0});
        grad_term += w * (1.0 + x) * du * du * h;
        mass_term += w * val * val * h;
    }
    double r_sq = u[0] * u[0] + u[1] * u[1];
    double oracle = grad_term - mass_term * r_sq; // p1 = 2: r^{p1} = r^2
    CHECK(crit.delta == Approx(oracle).epsilon(1e-6));
    CHECK(crit.blowup == (oracle < 0.0));
}

TEST_CASE("blow-up time bounds, constant exponent") {
    ExponentSchedule sched = degenerate_constant_p1(2.0);
    BlowupParams bp;
    bp.kappa_fast = 1.0;
    bp.gamma_fast = 1.0;
    bp.kappa_slow = 2.0;
    bp.gamma_slow = 1.0;
    bp.schedule = &sched;

    auto t_up = blowup_time_upper(2.0, 0.0, bp);
    REQUIRE(t_up);
    CHECK(*t_up == Approx(0.5 * std::log(2.0)).epsilon(1e-10)); // 0.34657

    auto t_lo = blowup_time_lower(4.0, 0.0, bp);
    REQUIRE(t_lo);
    CHECK(*t_lo == Approx(0.25 * std::log(2.0)).epsilon(1e-10)); // 0.17329

    // equilibrium initial energy: log argument 0 -> absent
    CHECK_FALSE(blowup_time_upper(1.0, 0.0, bp).has_value());
    // sub-threshold
    CHECK_FALSE(blowup_time_upper(0.5, 0.0, bp).has_value());
    CHECK_FALSE(blowup_time_lower(1.5, 0.0, bp).has_value()); // g0 y < kappa_slow
}

TEST_CASE("blow-up time bound, variable exponent p1 = 2 + t") {
    // needs p_total - 1 >= p1 over the validation horizon
    ExponentSchedule sched(ExponentFunction::zero(), ExponentFunction::linear(2.0, 1.0),
                           15.0, 12.0);
    BlowupParams bp;
    bp.kappa_fast = 1.0;
    bp.gamma_fast = 1.0;
    bp.kappa_slow = 1.0;
    bp.gamma_slow = 1.0;
    bp.schedule = &sched;
    auto t_star = blowup_time_upper(2.0, 0.0, bp);
    REQUIRE(t_star);

    // oracle: bisection on 2t + t^2/2 = ln 2
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (2.0 * mid + 0.5 * mid * mid < std::log(2.0) ? lo : hi) = mid;
    }
    CHECK(*t_star == Approx(hi).epsilon(1e-8));
    CHECK(*t_star == Approx(0.320839).epsilon(1e-4));

    // direct stiff integration of the log-term envelope hits the same time
    SingularityResult sing = integrate_logterm_envelope(2.0, 0.0, 1.0, 1.0, sched, 2.0);
    REQUIRE(sing.blown);
    CHECK(sing.t_singular == Approx(*t_star).margin(1e-6));
}

TEST_CASE("bracket is ordered with method tags") {
    ExponentSchedule sched = degenerate_constant_p1(2.0);
    BlowupParams bp;
    bp.kappa_fast = 1.0;
    bp.gamma_fast = 1.0;
    bp.kappa_slow = 2.0;
    bp.gamma_slow = 1.0;
    bp.schedule = &sched;
    EnergyParams ep;
    ep.a0 = ep.A0 = 1.0;
    ep.b1 = 0.0;
    ep.B1 = 1.0;
    ep.g0 = ep.G0 = 1.0;
    ep.lambda1 = 1.0;
    ep.schedule = &sched;

    BlowupBracket br = blowup_bracket(4.0, 0.0, bp, ep, 3.0, -1.0);
    REQUIRE(br.detected);
    REQUIRE(br.t_lower);
    REQUIRE(br.t_upper);
    CHECK(*br.t_lower == Approx(0.5 * std::log(4.0 / 3.0)).epsilon(1e-9));
    CHECK(*br.t_upper == Approx(0.25 * std::log(2.0)).epsilon(1e-9));
    CHECK(*br.t_lower <= *br.t_upper);
    CHECK(br.method_lower == "p1-inversion-fast");
    CHECK(br.method_upper == "p1-inversion-slow");
    CHECK(br.delta == -1.0);
}

TEST_CASE("bracket degenerates when the constant sets coincide") {
    ExponentSchedule sched = degenerate_constant_p1(2.0);
    BlowupParams bp;
    bp.kappa_fast = bp.kappa_slow = 1.0;
    bp.gamma_fast = bp.gamma_slow = 1.0;
    bp.schedule = &sched;
    EnergyParams ep;
    ep.a0 = ep.A0 = 1.0;
    ep.b1 = ep.B1 = 0.0;
    ep.g0 = ep.G0 = 1.0;
    ep.lambda1 = 1.0;
    ep.schedule = &sched;
    BlowupBracket br = blowup_bracket(2.0, 0.0, bp, ep, 3.0);
    REQUIRE(br.detected);
    REQUIRE(br.t_lower);
    REQUIRE(br.t_upper);
    CHECK(std::abs(*br.t_upper - *br.t_lower) < 1e-8);
}

TEST_CASE("bracket reports no blow-up for sub-threshold energy") {
    ExponentSchedule sched = degenerate_constant_p1(2.0);
    BlowupParams bp;
    bp.kappa_fast = 1.0;
    bp.gamma_fast = 0.2;
    bp.kappa_slow = 2.0;
    bp.gamma_slow = 0.1;
    bp.schedule = &sched;
    EnergyParams ep;
    ep.a0 = ep.A0 = 1.0;
    ep.b1 = 0.0;
    ep.B1 = 1.0;
    ep.g0 = 0.1;
    ep.G0 = 0.2;
    ep.lambda1 = 1.0;
    ep.schedule = &sched;
    BlowupBracket br = blowup_bracket(0.5, 0.0, bp, ep, 3.0);
    CHECK_FALSE(br.detected);
}

TEST_CASE("upper blow-up time decreases with initial energy") {
    ExponentSchedule sched = degenerate_constant_p1(2.0);
    BlowupParams bp;
    bp.kappa_fast = 1.0;
    bp.gamma_fast = 1.0;
    bp.kappa_slow = 1.0;
    bp.gamma_slow = 1.0;
    bp.schedule = &sched;
    double prev = 1e300;
    for (double y1 : {1.2, 1.5, 2.0, 3.0, 6.0, 20.0}) {
        auto t = blowup_time_upper(y1, 0.0, bp);
        REQUIRE(t);
        CHECK(*t < prev);
        prev = *t;
    }
}

TEST_CASE("P1 inversion matches the Bernoulli closed form on random sets") {
    SplitMix64 rng(31337);
    for (int rep = 0; rep < 100; ++rep) {
        double p = rng.uniform(0.5, 3.0);
        double p1v = 2.0 * p;
        ExponentSchedule sched = degenerate_constant_p1(p1v, 2.0 * p1v + 2.0);
        double c1 = rng.uniform(0.2, 3.0);
        double c2 = rng.uniform(0.2, 3.0);
        double y1 = std::pow(c1 / c2 * rng.uniform(1.1, 8.0), 1.0 / p);
        BlowupParams bp;
        bp.kappa_fast = c1;
        bp.gamma_fast = c2;
        bp.kappa_slow = c1;
        bp.gamma_slow = c2;
        bp.schedule = &sched;
        auto t = blowup_time_upper(y1, 0.0, bp);
        REQUIRE(t);
        double closed = (1.0 / (2.0 * p * c1)) *
                        std::log(c2 * std::pow(y1, p) / (c2 * std::pow(y1, p) - c1));
        REQUIRE(*t == Approx(closed).epsilon(1e-8));

        // the numerically detected envelope singularity agrees to 1e-3
        EnergyParams ep;
        ep.a0 = ep.A0 = c1;
        ep.b1 = ep.B1 = 0.0;
        ep.g0 = ep.G0 = c2;
        ep.lambda1 = 1.0;
        ep.schedule = &sched;
        EnvelopeOptions eo;
        eo.cadence = std::max(closed / 20.0, 1e-4);
        EnvelopeTrajectory env = integrate_envelopes(y1, 0.0, ep, closed * 3.0 + 1.0, eo);
        REQUIRE(env.up_blowup);
        REQUIRE(env.t_singular_up == Approx(closed).epsilon(1e-3));
    }
}
