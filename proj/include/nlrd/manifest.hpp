#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "nlrd/blowup.hpp"
#include "nlrd/energy.hpp"
#include "nlrd/regimes.hpp"
#include "nlrd/scenario.hpp"
#include "nlrd/spectral.hpp"
#include "nlrd/version.hpp"

namespace nlrd {

using Json = nlohmann::ordered_json;

inline std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file for hashing: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a64_hex(ss.str());
}

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Trajectory CSV: header row, fixed column order, 17 significant digits.
inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
    os << "t,r,r_sq,k0,p_norm_l2,q_norm_l2,p_norm_h1,q_norm_h1,rho,p0,p1,phase\n";
    for (const Sample& s : rec.samples) {
        os << fmt17(s.t) << ',' << fmt17(s.r) << ',' << fmt17(s.r * s.r) << ',' << s.k0
           << ',' << fmt17(s.p_l2) << ',' << fmt17(s.q_l2) << ',' << fmt17(s.p_h1) << ','
           << fmt17(s.q_h1) << ',' << fmt17(s.rho) << ',' << fmt17(s.p0) << ','
           << fmt17(s.p1) << ',' << phase_name(s.phase) << '\n';
    }
}

/// Optional per-mode dump: t,u_1..u_N.
inline void write_modes_csv(std::ostream& os, const TrajectoryRecord& rec) {
    if (rec.samples.empty() || rec.samples.front().u.empty()) return;
    const std::size_t n = rec.samples.front().u.size();
    os << "t";
    for (std::size_t k = 1; k <= n; ++k) os << ",u_" << k;
    os << '\n';
    for (const Sample& s : rec.samples) {
        os << fmt17(s.t);
        for (std::size_t k = 0; k < n; ++k) os << ',' << fmt17(s.u[k]);
        os << '\n';
    }
}

inline Json json_time(double t) {
    if (std::isfinite(t)) return Json(t);
    return Json(nullptr);
}

struct SolvabilityReport {
    bool applicable = false;
    bool satisfied = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double evaluated_at = 0.0;
};

/// The solvability-threshold hypothesis instantiated from a scenario: the
/// dissipative-stretch constant b1_bar on (0, t0) and the section-3 style
/// (b10, g10) pair evaluated at the midpoint of the non-dissipative
/// interval (where the p1 > p0 gap is representative).
inline SolvabilityReport solvability_report(const Scenario& sc, double r0) {
    SolvabilityReport rep;
    const double t0 = sc.schedule.t0();
    const double t1 = sc.schedule.t1();
    const double horizon = sc.solver.horizon;
    if (!std::isfinite(t0) || t0 >= horizon) return rep; // never non-dissipative
    double t_hi = std::isfinite(t1) ? std::min(t1, horizon) : horizon;
    double t_mid = 0.5 * (t0 + t_hi);
    if (classify_phase(t_mid, sc.schedule) != PhaseTag::NonDissipative) return rep;

    SolvabilityData data;
    data.a0_lambda1 = sc.coeffs.a_bounds.lo * sc.domain.eigenvalue(1);
    data.b1_bar = t0 > 0.0 ? sup_inf_b1_over(0.0, t0, sc.coeffs, sc.schedule, sc.domain)
                           : 0.0;
    NonDissipativeConstants nd =
        nondissipative_constants(t_mid, sc.coeffs, sc.schedule, sc.domain);
    data.b10_t0 = nd.b10;
    data.g10 = nd.g10;
    data.p1_t0 = sc.schedule.p1(t0);
    rep.applicable = true;
    rep.satisfied = solvability_threshold(r0, t0, data);
    rep.lhs = data.g10 *
              std::pow(std::exp(-(data.a0_lambda1 + data.b1_bar) * t0) * r0, data.p1_t0);
    rep.rhs = data.a0_lambda1 + data.b10_t0;
    rep.evaluated_at = t_mid;
    return rep;
}

struct RunArtifacts {
    std::string scenario_hash;
    std::uint64_t seed = 0;
    double horizon = 0.0;
    const ExponentSchedule* schedule = nullptr;
    const TrajectoryRecord* record = nullptr;
    TrajectoryVerdict verdict;
    SolvabilityReport solvability;
    std::optional<CriterionResult> criterion;
    std::optional<BlowupBracket> bracket;
    std::optional<double> separation;
    std::string trajectory_csv;
    std::string modes_csv; // empty = not written
};

inline Json build_manifest(const RunArtifacts& art) {
    Json j;
    j["tool"] = kToolName;
    j["version"] = kVersion;
    j["seed"] = art.seed;
    j["scenario_hash"] = art.scenario_hash;

    Json phases = Json::array();
    if (art.schedule) {
        for (const PhaseInterval& iv : phase_timeline(*art.schedule, art.horizon)) {
            Json p;
            p["from"] = iv.t_begin;
            p["to"] = iv.t_end;
            p["phase"] = phase_name(iv.tag);
            phases.push_back(p);
        }
        j["phase_timeline"] = {{"t0", json_time(art.schedule->t0())},
                               {"t1", json_time(art.schedule->t1())},
                               {"intervals", phases}};
    }

    Json solv;
    solv["applicable"] = art.solvability.applicable;
    if (art.solvability.applicable) {
        solv["satisfied"] = art.solvability.satisfied;
        solv["lhs"] = art.solvability.lhs;
        solv["rhs"] = art.solvability.rhs;
        solv["evaluated_at"] = art.solvability.evaluated_at;
    }
    j["solvability"] = solv;

    if (art.criterion) {
        Json b;
        b["criterion"] = art.criterion->blowup;
        b["delta"] = art.criterion->delta;
        if (art.bracket && art.bracket->detected) {
            Json br;
            br["t_lower"] = art.bracket->t_lower ? Json(*art.bracket->t_lower) : Json(nullptr);
            br["t_upper"] = art.bracket->t_upper ? Json(*art.bracket->t_upper) : Json(nullptr);
            br["method_lower"] = art.bracket->method_lower;
            br["method_upper"] = art.bracket->method_upper;
            b["bracket"] = br;
        } else {
            b["bracket"] = nullptr;
        }
        j["blowup"] = b;
    } else {
        j["blowup"] = nullptr;
    }

    if (art.record) {
        Json v;
        v["tag"] = verdict_name(art.verdict.tag);
        v["slope"] = art.verdict.slope;
        v["r_min_tail"] = art.verdict.r_min_tail;
        v["r_max_tail"] = art.verdict.r_max_tail;
        if (art.verdict.tag == VerdictTag::BlowUp) v["t_blowup"] = art.verdict.t_blowup;
        j["verdict"] = v;

        Json switches = Json::array();
        for (const K0Switch& s : art.record->k0_switches) {
            Json e;
            e["t"] = s.t;
            e["from"] = s.from;
            e["to"] = s.to;
            switches.push_back(e);
        }
        j["k0_switch_log"] = switches;
        j["tail_warning"] = art.record->tail_warning;
    }

    j["separation_exponent"] = art.separation ? Json(*art.separation) : Json(nullptr);

    Json files;
    files["trajectory_csv"] = art.trajectory_csv;
    files["modes_csv"] = art.modes_csv.empty() ? Json(nullptr) : Json(art.modes_csv);
    j["files"] = files;
    return j;
}

} // namespace nlrd
