#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nlrd/domain.hpp"
#include "nlrd/errors.hpp"
#include "nlrd/exponents.hpp"
#include "nlrd/fields.hpp"

namespace nlrd {

enum class PhaseTag { Dissipative, Critical, NonDissipative, Degenerate };

inline const char* phase_name(PhaseTag tag) {
    switch (tag) {
    case PhaseTag::Dissipative: return "dissipative";
    case PhaseTag::Critical: return "critical";
    case PhaseTag::NonDissipative: return "non-dissipative";
    case PhaseTag::Degenerate: return "degenerate";
    }
    return "?";
}

constexpr double kPhaseTol = 1e-12;

/// Phase of the equation at time t, by the sign of p0 - p1. Degenerate
/// (p0 = 0) takes precedence; exact ties (within 1e-12) are Critical.
inline PhaseTag classify_phase(double t, const ExponentSchedule& sched) {
    const double p0 = sched.p0(t);
    const double p1 = sched.p1(t);
    if (p0 <= kPhaseTol) return PhaseTag::Degenerate;
    if (std::abs(p0 - p1) <= kPhaseTol) return PhaseTag::Critical;
    return p0 > p1 ? PhaseTag::Dissipative : PhaseTag::NonDissipative;
}

struct PhaseInterval {
    double t_begin;
    double t_end;
    PhaseTag tag;
};

/// Partition of [0, horizon] into phase intervals with boundaries at the
/// schedule's switch times.
inline std::vector<PhaseInterval> phase_timeline(const ExponentSchedule& sched,
                                                 double horizon) {
    std::vector<double> cuts = {0.0};
    if (std::isfinite(sched.t0()) && sched.t0() > 0.0 && sched.t0() < horizon)
        cuts.push_back(sched.t0());
    if (std::isfinite(sched.t1()) && sched.t1() > 0.0 && sched.t1() < horizon)
        cuts.push_back(sched.t1());
    cuts.push_back(horizon);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<PhaseInterval> out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        PhaseTag tag = classify_phase(mid, sched);
        if (!out.empty() && out.back().tag == tag)
            out.back().t_end = cuts[i + 1];
        else
            out.push_back({cuts[i], cuts[i + 1], tag});
    }
    return out;
}

/// Tightest constant C with g s^{p1} <= f s^{p0} + C for all s >= 0,
/// from the eps-Young split with eps = (p1/p0)^{p1/p0}:
///   C = [(p1/p0)^{p1/(p0-p1)} - (p1/p0)^{p0/(p0-p1)}] (g^{p0}/f^{p1})^{1/(p0-p1)}.
/// Valid in the dissipative phase p0 > p1; for p1 = 0 the bound degenerates
/// to C = g.
inline double young_gap_constant(double f, double g, double p0, double p1) {
    if (f <= 0.0 || g < 0.0) throw std::invalid_argument("young_gap_constant: f > 0, g >= 0 required");
    if (p1 == 0.0) return g;
    if (p0 <= p1) throw PhaseError("young_gap_constant: requires p0 > p1 (dissipative phase)");
    const double ratio = p1 / p0;
    const double gap = p0 - p1;
    const double bracket = std::pow(ratio, p1 / gap) - std::pow(ratio, p0 / gap);
    return bracket * std::pow(std::pow(g, p0) / std::pow(f, p1), 1.0 / gap);
}

/// Pointwise effective damping of the dissipative phase,
///   b1(t,x) = b(x) - young_gap_constant(f(t,x), g(t,x), p0(t), p1(t)),
/// with its extrema over the verification grid.
struct EffectiveCoefficient {
    double t;
    double inf_b1;  // b1(t) = inf_x
    double sup_b1;  // b1~(t) = sup_x
};

inline double b1_pointwise(double t, Point p, const SpectralDomain& dom,
                           const CoefficientSet& coeffs, const ExponentSchedule& sched) {
    return coeffs.b.eval(dom, p) -
           young_gap_constant(coeffs.f.eval(dom, t, p), coeffs.g.eval(dom, t, p),
                              sched.p0(t), sched.p1(t));
}

inline EffectiveCoefficient compute_b1(double t, const CoefficientSet& coeffs,
                                       const ExponentSchedule& sched,
                                       const SpectralDomain& dom, int grid_n = 1024) {
    if (dom.kind() == DomainKind::Rectangle) grid_n = std::max(grid_n, 4096);
    EffectiveCoefficient ec{t, 1e300, -1e300};
    for (const Point& p : dom.verification_grid(grid_n)) {
        double v = b1_pointwise(t, p, dom, coeffs, sched);
        ec.inf_b1 = std::min(ec.inf_b1, v);
        ec.sup_b1 = std::max(ec.sup_b1, v);
    }
    return ec;
}

enum class Dissipativity { StableCaseA, StableCaseB, Indeterminate };

inline const char* dissipativity_name(Dissipativity d) {
    switch (d) {
    case Dissipativity::StableCaseA: return "stable-case-a";
    case Dissipativity::StableCaseB: return "stable-case-b";
    case Dissipativity::Indeterminate: return "indeterminate";
    }
    return "?";
}

/// Case (a): inf b1 >= 0. Case (b): negative b1 but the sufficient
/// eigenvalue condition a0*lambda1 >= |sup b1| holds. Otherwise
/// indeterminate (deferred to the non-dissipative machinery).
inline Dissipativity dissipativity_check(const EffectiveCoefficient& ec, double a0,
                                         double lambda1) {
    if (ec.inf_b1 >= 0.0) return Dissipativity::StableCaseA;
    if (a0 * lambda1 >= std::abs(ec.sup_b1)) return Dissipativity::StableCaseB;
    return Dissipativity::Indeterminate;
}

/// Non-dissipative phase (p1 > p0) effective coefficients:
///   b1(t,x) = b - ((p1-p0)/p1) (f^{p1}/g^{p0})^{1/(p1-p0)},
///   g1(t,x) = (1 + p0/p1) g,
/// and the derived constants b10 = inf_x |b1|, g10 = sup_x g1.
struct NonDissipativeConstants {
    double t;
    double b10;
    double g10;
    double inf_b1;
};

inline double b1_nondissipative(double b, double f, double g, double p0, double p1) {
    if (p1 <= p0) throw PhaseError("b1_nondissipative: requires p1 > p0");
    if (g <= 0.0) return b; // f-term bound vanishes in the g -> 0 limit
    const double gap = p1 - p0;
    return b - (gap / p1) * std::pow(std::pow(f, p1) / std::pow(g, p0), 1.0 / gap);
}

inline double g1_coefficient(double g, double p0, double p1) {
    if (p1 <= 0.0) throw PhaseError("g1_coefficient: requires p1 > 0");
    return (1.0 + p0 / p1) * g;
}

inline NonDissipativeConstants nondissipative_constants(double t,
                                                        const CoefficientSet& coeffs,
                                                        const ExponentSchedule& sched,
                                                        const SpectralDomain& dom,
                                                        int grid_n = 1024) {
    const double p0 = sched.p0(t);
    const double p1 = sched.p1(t);
    NonDissipativeConstants nd{t, 1e300, -1e300, 1e300};
    for (const Point& p : dom.verification_grid(grid_n)) {
        double b1 = b1_nondissipative(coeffs.b.eval(dom, p), coeffs.f.eval(dom, t, p),
                                      coeffs.g.eval(dom, t, p), p0, p1);
        double g1 = g1_coefficient(coeffs.g.eval(dom, t, p), p0, p1);
        nd.b10 = std::min(nd.b10, std::abs(b1));
        nd.g10 = std::max(nd.g10, g1);
        nd.inf_b1 = std::min(nd.inf_b1, b1);
    }
    return nd;
}

/// sup over (t_lo, t_hi) of inf_x b1(t,x) (the dissipative Young form),
/// evaluated on a 128-point time grid.
inline double sup_inf_b1_over(double t_lo, double t_hi, const CoefficientSet& coeffs,
                              const ExponentSchedule& sched, const SpectralDomain& dom,
                              int grid_n = 256) {
    if (t_hi <= t_lo) return compute_b1(t_lo, coeffs, sched, dom, grid_n).inf_b1;
    double sup = -1e300;
    const int nt = 128;
    for (int i = 0; i <= nt; ++i) {
        double t = t_lo + (t_hi - t_lo) * i / nt;
        if (classify_phase(t, sched) != PhaseTag::Dissipative) continue;
        sup = std::max(sup, compute_b1(t, coeffs, sched, dom, grid_n).inf_b1);
    }
    return sup;
}

} // namespace nlrd
