#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nlrd/regimes.hpp"
#include "nlrd/rng.hpp"

using namespace nlrd;
using Catch::Approx;

namespace {

// Brute-force oracle for the Young gap: max over s >= 0 of g s^{p1} - f s^{p0}
// by golden-section search around the stationary point, with a bracket scan.
double young_gap_oracle(double f, double g, double p0, double p1) {
    auto h = [&](double s) { return g * std::pow(s, p1) - f * std::pow(s, p0); };
    // the maximizer is s* = (g p1 / (f p0))^{1/(p0-p1)}; bracket it generously
    double guess = std::pow(g * p1 / (f * p0), 1.0 / (p0 - p1));
    double lo = 0.0, hi = std::max(guess * 4.0, 1e-6);
    while (h(hi) > h(0.5 * hi)) hi *= 2.0;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = h(x1), f2 = h(x2);
    for (int i = 0; i < 300; ++i) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = h(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = h(x1);
        }
    }
    return h(0.5 * (a + b));
}

ExponentSchedule demo_schedule() {
    // p0 = 2 e^{-t}, p1 = 1 - e^{-t}
    return ExponentSchedule(ExponentFunction::exp_relax(2.0, 1.0),
                            ExponentFunction::saturate(1.0, 1.0), 3.0, 20.0);
}

} // namespace

TEST_CASE("phase classification") {
    ExponentSchedule sched = demo_schedule();
    CHECK(classify_phase(0.0, sched) == PhaseTag::Dissipative);
    CHECK(classify_phase(std::log(3.0), sched) == PhaseTag::Critical);
    CHECK(classify_phase(5.0, sched) == PhaseTag::NonDissipative);

    ExponentSchedule degen(ExponentFunction::linear_clamp(2.0, 2.0),
                           ExponentFunction::saturate(1.5, 2.0), 3.0, 20.0);
    CHECK(degen.t1() == Approx(1.0));
    CHECK(classify_phase(1.5, degen) == PhaseTag::Degenerate);
}

TEST_CASE("phase partition is contiguous and ordered for strictly monotone schedules") {
    ExponentSchedule degen(ExponentFunction::linear_clamp(2.0, 0.5),
                           ExponentFunction::saturate(1.9, 1.0), 3.0, 20.0);
    auto timeline = phase_timeline(degen, 10.0);
    REQUIRE(!timeline.empty());
    CHECK(timeline.front().t_begin == 0.0);
    CHECK(timeline.back().t_end == 10.0);
    for (std::size_t i = 1; i < timeline.size(); ++i) {
        CHECK(timeline[i].t_begin == Approx(timeline[i - 1].t_end));
        CHECK(static_cast<int>(timeline[i].tag) > static_cast<int>(timeline[i - 1].tag));
    }
    CHECK(timeline.front().tag == PhaseTag::Dissipative);
    CHECK(timeline.back().tag == PhaseTag::Degenerate);
}

TEST_CASE("young gap constant worked examples") {
    CHECK(young_gap_constant(1.0, 1.0, 2.0, 1.0) == Approx(0.25).epsilon(1e-12));
    CHECK(young_gap_constant(1.0, 1.0, 4.0, 2.0) == Approx(0.25).epsilon(1e-12));
    CHECK(young_gap_constant(2.0, 1.0, 2.0, 1.0) == Approx(0.125).epsilon(1e-12));
    // oracle agreement on the worked examples
    CHECK(young_gap_constant(1.0, 1.0, 2.0, 1.0) ==
          Approx(young_gap_oracle(1.0, 1.0, 2.0, 1.0)).epsilon(1e-10));
    CHECK(young_gap_constant(2.0, 1.0, 2.0, 1.0) ==
          Approx(young_gap_oracle(2.0, 1.0, 2.0, 1.0)).epsilon(1e-10));
}

TEST_CASE("young gap edge cases") {
    CHECK(young_gap_constant(1.0, 0.7, 2.0, 0.0) == 0.7); // p1 = 0 degenerates to C = g
    CHECK_THROWS_AS(young_gap_constant(1.0, 1.0, 1.0, 2.0), PhaseError);
    CHECK_THROWS_AS(young_gap_constant(1.0, 1.0, 2.0, 2.0), PhaseError);
}

TEST_CASE("young gap is tight for random dissipative parameters") {
    SplitMix64 rng(12345);
    for (int i = 0; i < 1000; ++i) {
        double p1 = rng.uniform(0.1, 3.0);
        double p0 = p1 + rng.uniform(0.1, 3.0);
        double f = rng.uniform(0.1, 5.0);
        double g = rng.uniform(0.1, 5.0);
        double lib = young_gap_constant(f, g, p0, p1);
        double oracle = young_gap_oracle(f, g, p0, p1);
        REQUIRE(lib == Approx(oracle).epsilon(1e-8));
        // and the bound itself holds on a sample of s
        for (double s : {0.1, 0.5, 1.0, 2.0, 7.0})
            REQUIRE(g * std::pow(s, p1) <= f * std::pow(s, p0) + lib + 1e-12 * (1.0 + lib));
    }
}

TEST_CASE("corollary: g <= f keeps the gap below the f = g gap") {
    SplitMix64 rng(777);
    for (int i = 0; i < 1000; ++i) {
        double p1 = rng.uniform(0.1, 2.0);
        double p0 = p1 + rng.uniform(0.1, 2.0);
        double f = rng.uniform(0.5, 4.0);
        double g = f * rng.uniform(0.05, 1.0); // g <= f
        REQUIRE(young_gap_constant(f, g, p0, p1) <=
                young_gap_constant(f, f, p0, p1) + 1e-14);
    }
}

TEST_CASE("effective coefficient b1") {
    auto dom = SpectralDomain::interval(1.0, 2);
    // constant-coefficient scenarios evaluated at t = 0 where p0 = 2, p1 = 1
    ExponentSchedule sched(ExponentFunction::exp_relax(2.0, 0.1),
                           ExponentFunction::piecewise({0.0, 100.0}, {1.0, 1.0}), 3.0,
                           10.0);
    auto make_cs = [&](double b) {
        return CoefficientSet::make(
            dom, SpatialField::constant(1.0), SpatialField::constant(b),
            SpaceTimeField{SpatialField::constant(1.0), TimeFactor::constant(1.0)},
            SpaceTimeField{SpatialField::constant(1.0), TimeFactor::constant(1.0)}, 1.0);
    };
    // b = 1, f = g = 1, p0 = 2, p1 = 1 -> b1 = 1 - 1/4 = 0.75 everywhere
    {
        auto cs = make_cs(1.01); // b > g(0,x) required; use 1.01 then compare shifted
        auto ec = compute_b1(0.0, cs, sched, dom);
        CHECK(ec.inf_b1 == Approx(1.01 - 0.25).epsilon(1e-12));
        CHECK(ec.sup_b1 == Approx(1.01 - 0.25).epsilon(1e-12));
        CHECK(dissipativity_check(ec, 1.0, dom.eigenvalue(1)) ==
              Dissipativity::StableCaseA);
    }
    // g -> 0 limit: b1 -> b
    {
        auto cs = CoefficientSet::make(
            dom, SpatialField::constant(1.0), SpatialField::constant(0.6),
            SpaceTimeField{SpatialField::constant(1.0), TimeFactor::constant(1.0)},
            SpaceTimeField{SpatialField::constant(1e-13), TimeFactor::constant(1.0)}, 1.0);
        auto ec = compute_b1(0.0, cs, sched, dom);
        CHECK(ec.inf_b1 == Approx(0.6).margin(1e-10));
    }
}

TEST_CASE("b1 negative case and eigenvalue condition") {
    // b - 1/4 with b = 0.2 gives -0.05 (case (b), negative)
    double b1 = 0.2 - young_gap_constant(1.0, 1.0, 2.0, 1.0);
    CHECK(b1 == Approx(-0.05).epsilon(1e-12));
    EffectiveCoefficient ec{0.0, b1, b1};
    CHECK(dissipativity_check(ec, 1.0, 1.0) == Dissipativity::StableCaseB); // 1 >= 0.05
    EffectiveCoefficient bad{0.0, -2.0, -2.0};
    CHECK(dissipativity_check(bad, 1.0, 1.0) == Dissipativity::Indeterminate); // 1 < 2
}

TEST_CASE("non-dissipative constants") {
    // p1 > p0: b1 = b - ((p1-p0)/p1)(f^{p1}/g^{p0})^{1/(p1-p0)}, g1 = (1+p0/p1) g
    CHECK(b1_nondissipative(1.0, 0.5, 1.0, 0.0, 2.0) == Approx(1.0 - 0.5).epsilon(1e-12));
    CHECK(g1_coefficient(0.8, 1.0, 2.0) == Approx(1.2).epsilon(1e-12));
    CHECK_THROWS_AS(b1_nondissipative(1.0, 1.0, 1.0, 2.0, 1.0), PhaseError);
}
