#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "nlrd/spectral.hpp"

using namespace nlrd;
using Catch::Approx;

namespace {

ExponentSchedule degenerate_p1(double p1, double p_total = 4.0) {
    return ExponentSchedule(ExponentFunction::zero(), ExponentFunction::constant(p1),
                            p_total, 50.0);
}

AveragedCoefficients make_avg(double a, double b, double f, double g) {
    AveragedCoefficients ac;
    ac.a_hat = a;
    ac.b_hat = b;
    ac.f_hat = TimeCoefficient::constant(f);
    ac.g_hat = TimeCoefficient::constant(g);
    return ac;
}

// Independent fixed-step RK4 for the scalar reduction of a single-mode run.
double rk4_scalar(const std::function<double(double, double)>& f, double y0, double t0,
                  double t1, int steps) {
    double y = y0, t = t0, h = (t1 - t0) / steps;
    for (int i = 0; i < steps; ++i) {
        double k1 = f(t, y);
        double k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
        double k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
        double k4 = f(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    return y;
}

} // namespace

TEST_CASE("modal state caches norms consistently") {
    auto dom = SpectralDomain::interval(M_PI, 3);
    ModalState st = ModalState::make(0.0, {3.0, 4.0, 0.0}, dom);
    CHECK(st.r == Approx(5.0).epsilon(1e-15));
    // recompute independently: h1^2 = 1*9 + 4*16
    CHECK(st.h1 == Approx(std::sqrt(9.0 + 64.0)).epsilon(1e-14));
}

TEST_CASE("linear heat mode decays exactly") {
    auto dom = SpectralDomain::interval(M_PI, 4);
    auto ac = make_avg(1.0, 0.0, 0.0, 0.0);
    auto sched = degenerate_p1(2.0);
    RunOptions ro;
    ro.horizon = 1.0;
    ro.cadence = 0.1;
    ro.rtol = 1e-12;
    ro.atol = 1e-18;
    TrajectoryRecord rec = run_modal(dom, ac, sched, {1.0, 0.0, 0.0, 0.0}, ro);
    CHECK_FALSE(rec.blown);
    const Sample& last = rec.samples.back();
    CHECK(last.u[0] == Approx(std::exp(-1.0)).epsilon(1e-8));
    for (int k = 1; k < 4; ++k) CHECK(last.u[k] == 0.0);
}

TEST_CASE("single-mode blow-up matches the Bernoulli closed form") {
    // u1' = -(1)u1 + r^2 u1 with u1(0) = 2: y = u1^2 obeys y' = -2y + 2y^2,
    // y0 = 4, blow-up at t* = (1/2) ln(4/3)
    auto dom = SpectralDomain::interval(M_PI, 4);
    auto ac = make_avg(1.0, 0.0, 0.0, 1.0);
    auto sched = degenerate_p1(2.0);
    RunOptions ro;
    ro.horizon = 1.0;
    ro.cadence = 0.001;
    TrajectoryRecord rec = run_modal(dom, ac, sched, {2.0, 0.0, 0.0, 0.0}, ro);
    REQUIRE(rec.blown);
    const double t_star = 0.5 * std::log(4.0 / 3.0);
    CHECK(rec.t_blowup == Approx(t_star).epsilon(5e-3));

    TrajectoryVerdict v = classify_trajectory(rec, 0.05);
    CHECK(v.tag == VerdictTag::BlowUp);
}

TEST_CASE("single-mode sub-threshold data decays to zero") {
    auto dom = SpectralDomain::interval(M_PI, 4);
    auto ac = make_avg(1.0, 0.0, 0.0, 1.0);
    auto sched = degenerate_p1(2.0);
    RunOptions ro;
    ro.horizon = 12.0;
    ro.cadence = 0.05;
    TrajectoryRecord rec = run_modal(dom, ac, sched, {0.5, 0.0, 0.0, 0.0}, ro);
    CHECK_FALSE(rec.blown);
    TrajectoryVerdict v = classify_trajectory(rec, 3.0);
    CHECK(v.tag == VerdictTag::DecayToZero);
}

TEST_CASE("exact equilibrium holds for ten time units") {
    // g u1^{p1} = a l1 + b with u1 = 1, a = l1 = g = 1, b = 0
    auto dom = SpectralDomain::interval(M_PI, 2);
    auto ac = make_avg(1.0, 0.0, 0.0, 1.0);
    auto sched = degenerate_p1(2.0);
    RunOptions ro;
    ro.horizon = 10.0;
    ro.cadence = 0.25;
    TrajectoryRecord rec = run_modal(dom, ac, sched, {1.0, 0.0}, ro);
    CHECK_FALSE(rec.blown);
    for (const Sample& s : rec.samples) REQUIRE(std::abs(s.r - 1.0) < 1e-7);
    TrajectoryVerdict v = classify_trajectory(rec, 2.0);
    CHECK(v.tag == VerdictTag::BoundedBand);
    CHECK(v.r_max_tail - v.r_min_tail < 1e-6);
}

TEST_CASE("threshold index k0") {
    auto dom = SpectralDomain::interval(M_PI, 6); // lambda = 1, 4, 9, ...
    auto ac = make_avg(1.0, 0.0, 0.0, 1.0);
    auto sched = degenerate_p1(2.0);

    K0Result a = compute_k0(0.0, 1.9, dom, ac, sched); // r^2 = 3.61 < 4
    CHECK(a.k0 == 2);
    CHECK_FALSE(a.equality);

    K0Result b = compute_k0(0.0, 2.0, dom, ac, sched); // r^2 = 4 = lambda_2
    CHECK(b.equality);
    CHECK(b.k0 == 3);

    K0Result c = compute_k0(0.0, 0.5, dom, ac, sched); // 0.25 < lambda_1
    CHECK(c.k0 == 1);

    // past the truncation: sentinel N+1 with warning
    K0Result d = compute_k0(0.0, 7.0, dom, ac, sched); // r^2 = 49 > lambda_6 = 36
    CHECK(d.k0 == 7);
    CHECK(d.truncated);
}

TEST_CASE("split projection worked examples") {
    auto dom = SpectralDomain::interval(M_PI, 3);
    ModalState st = ModalState::make(0.0, {3.0, 4.0, 0.0}, dom);
    SplitReport rep = split_projection(st, dom, 2);
    CHECK(rep.p_l2 == Approx(3.0).epsilon(1e-14));
    CHECK(rep.q_l2 == Approx(4.0).epsilon(1e-14));
    CHECK(st.r == Approx(5.0).epsilon(1e-14));
    REQUIRE(rep.lambda_j0);
    CHECK(*rep.lambda_j0 == Approx(1.0));

    // u entirely in H_{-k0}: P part zero, lambda_j0 absent
    ModalState q_only = ModalState::make(0.0, {0.0, 2.0, 1.0}, dom);
    SplitReport rep2 = split_projection(q_only, dom, 2);
    CHECK(rep2.p_l2 == 0.0);
    CHECK_FALSE(rep2.lambda_j0.has_value());

    // H10 split of (1,1,1)/sqrt(3) at k0 = 3
    double c = 1.0 / std::sqrt(3.0);
    ModalState mix = ModalState::make(0.0, {c, c, c}, dom);
    SplitReport rep3 = split_projection(mix, dom, 3);
    CHECK(rep3.p_h1 * rep3.p_h1 == Approx(5.0 / 3.0).epsilon(1e-12));
    CHECK(rep3.q_h1 * rep3.q_h1 == Approx(3.0).epsilon(1e-12));
}

TEST_CASE("orthogonal split invariant along a run") {
    auto dom = SpectralDomain::interval(M_PI, 8);
    auto ac = make_avg(1.0, 0.2, 0.0, 1.0);
    auto sched = degenerate_p1(2.0);
    std::vector<double> u0 = {1.2, 0.8, 0.4, 0.2, 0.1, 0.05, 0.02, 0.01};
    RunOptions ro;
    ro.horizon = 2.0;
    ro.cadence = 0.05;
    TrajectoryRecord rec = run_modal(dom, ac, sched, u0, ro);
    for (const Sample& s : rec.samples) {
        REQUIRE(s.p_l2 * s.p_l2 + s.q_l2 * s.q_l2 ==
                Approx(s.r * s.r).epsilon(1e-12).margin(1e-300));
        REQUIRE(s.p_h1 * s.p_h1 + s.q_h1 * s.q_h1 ==
                Approx(s.h1 * s.h1).epsilon(1e-12).margin(1e-300));
    }
}

TEST_CASE("mode growth factor is a first integral of the system") {
    auto dom = SpectralDomain::interval(M_PI, 4);
    auto sched = degenerate_p1(2.0);

    // linear: factor = e^{-lambda_k dt}
    auto lin = make_avg(1.0, 0.0, 0.0, 0.0);
    RunOptions ro;
    ro.horizon = 1.0;
    ro.cadence = 0.1;
    ro.rtol = 1e-11;
    TrajectoryRecord lin_rec = run_modal(dom, lin, sched, {1.0, 0.5, 0.0, 0.0}, ro);
    for (int k : {1, 2}) {
        double fac = mode_growth_factor(k, 0.2, 0.8, lin_rec, dom, lin);
        REQUIRE(fac == Approx(std::exp(-dom.eigenvalue(k) * 0.6)).epsilon(1e-9));
    }

    // equilibrium: factor = 1
    auto eq = make_avg(1.0, 0.0, 0.0, 1.0);
    TrajectoryRecord eq_rec = run_modal(dom, eq, sched, {1.0, 0.0, 0.0, 0.0}, ro);
    CHECK(mode_growth_factor(1, 0.0, 1.0, eq_rec, dom, eq) == Approx(1.0).epsilon(1e-9));

    // generic nonlinear run: factor reproduces each mode to 1e-6
    auto gen = make_avg(1.0, 0.3, 0.2, 0.9);
    TrajectoryRecord gen_rec = run_modal(dom, gen, sched, {0.9, 0.4, 0.2, 0.1}, ro);
    const Sample& sa = gen_rec.samples.front();
    const Sample& sb = gen_rec.samples.back();
    for (int k = 1; k <= 4; ++k) {
        double fac = mode_growth_factor(k, sa.t, sb.t, gen_rec, dom, gen);
        REQUIRE(fac * sa.u[k - 1] == Approx(sb.u[k - 1]).epsilon(1e-6));
    }

    CHECK_THROWS_AS(mode_growth_factor(1, -5.0, 0.5, gen_rec, dom, gen),
                    std::out_of_range);
}

TEST_CASE("single-mode run reduces to the scalar ODE") {
    auto dom = SpectralDomain::interval(M_PI, 4);
    auto ac = make_avg(1.0, 0.25, 0.0, 0.8);
    auto sched = degenerate_p1(2.0);
    RunOptions ro;
    ro.horizon = 1.5;
    ro.cadence = 0.1;
    ro.rtol = 1e-11;
    ro.atol = 1e-16;
    TrajectoryRecord rec = run_modal(dom, ac, sched, {0.7, 0.0, 0.0, 0.0}, ro);
    double oracle = rk4_scalar(
        [](double, double u) { return -(1.0 + 0.25) * u + 0.8 * u * u * u; }, 0.7, 0.0,
        1.5, 40000);
    CHECK(rec.samples.back().u[0] == Approx(oracle).epsilon(1e-8));
}

TEST_CASE("energy identity residual stays below 1e-4") {
    auto dom = SpectralDomain::interval(M_PI, 6);
    auto ac = make_avg(1.0, 0.3, 0.15, 0.9);
    ExponentSchedule sched(ExponentFunction::linear_clamp(2.0, 1.0),
                           ExponentFunction::saturate(1.8, 1.5), 3.0, 20.0);
    std::vector<double> u0 = {1.0, 0.5, 0.25, 0.1, 0.05, 0.02};
    RunOptions ro;
    ro.horizon = 4.0;
    ro.cadence = 0.005;
    TrajectoryRecord rec = run_modal(dom, ac, sched, u0, ro);
    CHECK(energy_identity_residual(rec, ac, sched) < 1e-4);
}

TEST_CASE("theorem-3 style dichotomy at a constructed k0") {
    auto dom = SpectralDomain::interval(M_PI, 8);
    double b = 0.5;
    auto ac = make_avg(1.0, b, 0.0, 1.0);
    auto sched = degenerate_p1(2.0);
    // r0 in the k0 = 4 window: lambda_3 + b < r0^2 < lambda_4 + b
    double r0 = std::sqrt(12.0);
    REQUIRE(compute_k0(0.0, r0, dom, ac, sched).k0 == 4);

    RunOptions ro;
    ro.horizon = 6.0;
    ro.cadence = 0.02;

    // data on the low (P) side grows without bound
    std::vector<double> grow(8, 0.0);
    grow[2] = r0; // mode 3
    TrajectoryRecord rec_g = run_modal(dom, ac, sched, grow, ro);
    TrajectoryVerdict vg = classify_trajectory(rec_g, rec_g.blown ? 0.01 : 1.0);
    CHECK((vg.tag == VerdictTag::BlowUp || vg.tag == VerdictTag::GrowthUnbounded));

    // data on the high (Q) side decays
    std::vector<double> decay(8, 0.0);
    decay[3] = r0; // mode 4
    TrajectoryRecord rec_d = run_modal(dom, ac, sched, decay, ro);
    TrajectoryVerdict vd = classify_trajectory(rec_d, 1.0);
    CHECK(vd.tag == VerdictTag::DecayToZero);
}

TEST_CASE("k0 switches are logged") {
    auto dom = SpectralDomain::interval(M_PI, 8);
    auto ac = make_avg(1.0, 0.5, 0.0, 1.0);
    auto sched = degenerate_p1(2.0);
    std::vector<double> decay(8, 0.0);
    decay[3] = std::sqrt(12.0);
    RunOptions ro;
    ro.horizon = 3.0;
    ro.cadence = 0.02;
    TrajectoryRecord rec = run_modal(dom, ac, sched, decay, ro);
    CHECK_FALSE(rec.k0_switches.empty()); // k0 falls as r decays
    for (const K0Switch& sw : rec.k0_switches) CHECK(sw.from != sw.to);
}

TEST_CASE("cone membership band") {
    auto dom = SpectralDomain::interval(M_PI, 4);
    auto ac = make_avg(1.0, 0.0, 0.0, 1.0);
    int k0 = 3;
    double s = ac.a_hat * dom.eigenvalue(k0) + ac.b_hat; // 9

    // u in H_{-k0}: distance 0, below the band
    ModalState inside = ModalState::make(0.0, {0.0, 0.0, 1.0, 0.5}, dom);
    CHECK_FALSE(cone_membership(inside, dom, k0, 0.01, 0.1, ac));

    // mid-band: ||P u||_{H10} = (eps+delta)s/2; P spans modes 1..2
    double eps = 0.01, delta = 0.1;
    double target = 0.5 * (eps + delta) * s;
    ModalState mid = ModalState::make(0.0, {target / std::sqrt(dom.eigenvalue(1)), 0.0, 1.0, 0.0}, dom);
    CHECK(cone_membership(mid, dom, k0, eps, delta, ac));

    // far above the band
    ModalState outside = ModalState::make(0.0, {2.0 * delta * s, 0.0, 1.0, 0.0}, dom);
    CHECK_FALSE(cone_membership(outside, dom, k0, eps, delta, ac));

    CHECK_THROWS_AS(cone_membership(mid, dom, k0, 0.1, 0.1, ac), ConfigError);
}

TEST_CASE("separation exponent of the linear stable system") {
    auto dom = SpectralDomain::interval(M_PI, 6);
    auto ac = make_avg(1.0, 0.3, 0.0, 0.0);
    auto sched = degenerate_p1(2.0);
    std::vector<double> u0 = {1.0, 0.3, 0.1, 0.0, 0.0, 0.0};
    SeparationOptions so;
    so.seed = 7;
    so.renorm_dt = 0.1;
    SeparationResult res = separation_exponent(dom, ac, sched, u0, 0.0, 8.0, so);
    CHECK_FALSE(res.truncated);
    CHECK(res.exponent == Approx(-(1.0 + 0.3)).epsilon(0.05));

    // deterministic under a fixed seed
    SeparationResult res2 = separation_exponent(dom, ac, sched, u0, 0.0, 8.0, so);
    CHECK(res.exponent == res2.exponent);
    CHECK(res.average == res2.average);
}

TEST_CASE("separation exponent of a sub-threshold equilibrium direction is nonpositive") {
    auto dom = SpectralDomain::interval(M_PI, 4);
    auto ac = make_avg(1.0, 0.0, 0.0, 1.0);
    auto sched = degenerate_p1(2.0);
    std::vector<double> u0 = {0.5, 0.0, 0.0, 0.0}; // sub-threshold
    SeparationOptions so;
    so.seed = 3;
    SeparationResult res = separation_exponent(dom, ac, sched, u0, 0.0, 6.0, so);
    CHECK(res.exponent <= 1e-6);
}

TEST_CASE("separation exponent truncates on blow-up") {
    auto dom = SpectralDomain::interval(M_PI, 4);
    auto ac = make_avg(1.0, 0.0, 0.0, 1.0);
    auto sched = degenerate_p1(2.0);
    std::vector<double> u0 = {2.0, 0.0, 0.0, 0.0}; // super-threshold
    SeparationOptions so;
    so.seed = 3;
    so.renorm_dt = 0.01;
    SeparationResult res = separation_exponent(dom, ac, sched, u0, 0.0, 6.0, so);
    CHECK(res.truncated);
}

TEST_CASE("step_system advances a state by one macro step") {
    auto dom = SpectralDomain::interval(M_PI, 2);
    auto ac = make_avg(1.0, 0.0, 0.0, 0.0);
    auto sched = degenerate_p1(2.0);
    ModalState st = ModalState::make(0.0, {1.0, 1.0}, dom);
    ModalState next = step_system(st, dom, ac, sched, 0.5, 1e-11, 1e-16);
    CHECK(next.t == Approx(0.5));
    CHECK(next.u[0] == Approx(std::exp(-0.5)).epsilon(1e-9));
    CHECK(next.u[1] == Approx(std::exp(-2.0)).epsilon(1e-9));
}

TEST_CASE("rectangle scenarios run end to end") {
    std::istringstream ss(R"(
[domain]
kind = rectangle
lx = 1.0
ly = 1.3
modes = 6
[coefficients]
a = constant 0.05
b = constant 0.4
f = constant 0.2
g = constant 0.3
[exponents]
p = 3.0
p0 = zero
p1 = constant 2.0
[initial]
kind = field
form = parabola 1.0
scale_to_r0 = 0.5
[solver]
horizon = 1.0
cadence = 0.05
proj_tol = 5e-3
)");
    Scenario sc = scenario_from_ini(IniDoc::parse(ss));
    TrajectoryRecord rec = run_scenario(sc);
    CHECK_FALSE(rec.blown);
    // a l1 dominates: decay
    CHECK(rec.samples.back().r < rec.samples.front().r);
    for (const Sample& s : rec.samples)
        REQUIRE(s.p_l2 * s.p_l2 + s.q_l2 * s.q_l2 ==
                Approx(s.r * s.r).epsilon(1e-12).margin(1e-300));
}

TEST_CASE("runs are deterministic") {
    auto dom = SpectralDomain::interval(M_PI, 6);
    auto ac = make_avg(1.0, 0.2, 0.1, 0.8);
    auto sched = degenerate_p1(2.0);
    std::vector<double> u0 = {1.0, 0.4, 0.2, 0.1, 0.0, 0.0};
    RunOptions ro;
    ro.horizon = 2.0;
    ro.cadence = 0.05;
    TrajectoryRecord r1 = run_modal(dom, ac, sched, u0, ro);
    TrajectoryRecord r2 = run_modal(dom, ac, sched, u0, ro);
    REQUIRE(r1.samples.size() == r2.samples.size());
    for (std::size_t i = 0; i < r1.samples.size(); ++i) {
        REQUIRE(r1.samples[i].r == r2.samples[i].r);
        REQUIRE(r1.samples[i].u == r2.samples[i].u);
    }
}
