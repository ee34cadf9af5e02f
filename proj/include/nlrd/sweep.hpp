#pragma once

#include <atomic>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "nlrd/errors.hpp"
#include "nlrd/manifest.hpp"
#include "nlrd/rng.hpp"
#include "nlrd/scenario.hpp"
#include "nlrd/spectral.hpp"

namespace nlrd {

/// One sweep axis. Kind "ratio" places the initial energy fraction `value`
/// in the low (P) modes at the k0 boundary; kind "r0" rescales the initial
/// norm; kind "key" overrides a numeric scenario value section.key.
struct SweepAxis {
    enum class Kind { Ratio, R0, Key };
    Kind kind = Kind::R0;
    std::string section, key; // Kind::Key
    std::string label;
    double min = 0.0, max = 1.0;
    int count = 1;

    double value(int i) const {
        if (count <= 1) return min;
        return min + (max - min) * double(i) / double(count - 1);
    }
};

struct SweepSpec {
    std::string scenario_path;
    std::vector<SweepAxis> axes; // 1 or 2
    bool record_separation = false;
    double tail_window = 0.0; // 0 = horizon / 5
    double separation_eta = 1e-8;
};

namespace detail {

inline SweepAxis parse_axis(const IniDoc& ini, const std::string& prefix) {
    SweepAxis ax;
    std::string name = ini.get("sweep", prefix);
    ax.label = name;
    if (name == "ratio")
        ax.kind = SweepAxis::Kind::Ratio;
    else if (name == "r0")
        ax.kind = SweepAxis::Kind::R0;
    else {
        auto dot = name.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 >= name.size())
            throw ConfigError("sweep: axis '" + name +
                              "' must be ratio, r0 or section.key");
        ax.kind = SweepAxis::Kind::Key;
        ax.section = name.substr(0, dot);
        ax.key = name.substr(dot + 1);
    }
    ax.min = ini.get_double("sweep", prefix + "_min");
    ax.max = ini.get_double("sweep", prefix + "_max");
    ax.count = static_cast<int>(ini.get_double("sweep", prefix + "_count"));
    if (ax.count < 1) throw ConfigError("sweep: axis count must be >= 1");
    return ax;
}

} // namespace detail

inline SweepSpec load_sweep_spec(const std::string& path) {
    IniDoc ini = IniDoc::parse_file(path);
    SweepSpec spec;
    spec.scenario_path = ini.get("sweep", "scenario");
    // resolve relative to the spec file
    auto slash = path.find_last_of("/\\");
    if (slash != std::string::npos && !spec.scenario_path.empty() &&
        spec.scenario_path.front() != '/')
        spec.scenario_path = path.substr(0, slash + 1) + spec.scenario_path;
    spec.axes.push_back(detail::parse_axis(ini, "axis1"));
    if (ini.has("sweep", "axis2")) spec.axes.push_back(detail::parse_axis(ini, "axis2"));
    spec.record_separation = ini.get_double_or("sweep", "separation", 0.0) != 0.0;
    spec.tail_window = ini.get_double_or("sweep", "tail_window", 0.0);
    spec.separation_eta = ini.get_double_or("sweep", "eta", 1e-8);
    long cells = 1;
    for (const auto& ax : spec.axes) cells *= ax.count;
    if (cells < 1) throw ConfigError("sweep: empty grid");
    return spec;
}

struct SweepRow {
    int index = 0;
    std::vector<double> axis_values;
    int k0_t1 = 0;
    std::string verdict;
    double slope = 0.0;
    double r_end = 0.0;
    double separation = std::numeric_limits<double>::quiet_NaN();
    std::string error; // empty on success
};

struct SweepResult {
    std::vector<std::string> axis_labels;
    std::vector<SweepRow> rows;
    long failed = 0;
    bool record_separation = false;
};

namespace detail {

inline SweepRow run_cell(const SweepSpec& spec, const IniDoc& base, int index,
                         const std::vector<int>& coord, std::uint64_t master_seed) {
    SweepRow row;
    row.index = index;
    for (std::size_t a = 0; a < spec.axes.size(); ++a)
        row.axis_values.push_back(spec.axes[a].value(coord[a]));
    try {
        IniDoc ini = base;
        std::optional<double> ratio;
        for (std::size_t a = 0; a < spec.axes.size(); ++a) {
            const SweepAxis& ax = spec.axes[a];
            const double v = row.axis_values[a];
            switch (ax.kind) {
            case SweepAxis::Kind::R0:
                ini.set("initial", "scale_to_r0", fmt17(v));
                break;
            case SweepAxis::Kind::Key:
                ini.set(ax.section, ax.key, fmt17(v));
                break;
            case SweepAxis::Kind::Ratio:
                ratio = v;
                break;
            }
        }
        Scenario sc = scenario_from_ini(ini);
        AveragedCoefficients ac = AveragedCoefficients::from(sc, sc.solver.quad_nodes);
        std::vector<double> u0 = initial_coefficients(sc);

        if (ratio) {
            if (*ratio < 0.0 || *ratio > 1.0)
                throw ConfigError("sweep: ratio must lie in [0, 1]");
            double r0 = 0.0;
            for (double c : u0) r0 += c * c;
            r0 = std::sqrt(r0);
            if (r0 <= 0.0) throw ConfigError("sweep: ratio axis needs a nonzero r0");
            K0Result k0 = compute_k0(0.0, r0, sc.domain, ac, sc.schedule);
            if (k0.k0 < 2 || k0.k0 > sc.domain.mode_count())
                throw ConfigError("sweep: ratio axis needs 2 <= k0 <= N (k0 = " +
                                  std::to_string(k0.k0) + ")");
            std::fill(u0.begin(), u0.end(), 0.0);
            u0[k0.k0 - 2] = r0 * std::sqrt(*ratio);       // low (P) side, mode k0-1
            u0[k0.k0 - 1] = r0 * std::sqrt(1.0 - *ratio); // high (Q) side, mode k0
        }

        TrajectoryRecord rec = run_modal(sc.domain, ac, sc.schedule, u0,
                                         run_options_from(sc));
        double tail = spec.tail_window > 0.0 ? spec.tail_window : sc.solver.horizon / 5.0;
        if (!rec.blown)
            tail = std::min(tail, rec.samples.back().t - rec.samples.front().t);
        TrajectoryVerdict verdict = classify_trajectory(rec, tail);
        row.verdict = verdict_name(verdict.tag);
        row.slope = verdict.slope;
        row.r_end = rec.samples.back().r;

        // k0 at the start of the degenerate phase (or at t = 0 if the run
        // begins there)
        double t1 = sc.schedule.t1();
        double t_ref = std::isfinite(t1) ? std::min(t1, rec.samples.back().t) : 0.0;
        const Sample* best = &rec.samples.front();
        for (const Sample& s : rec.samples)
            if (std::abs(s.t - t_ref) < std::abs(best->t - t_ref)) best = &s;
        row.k0_t1 = best->k0;

        if (spec.record_separation) {
            SeparationOptions so;
            so.eta = spec.separation_eta;
            so.seed = derive_seed(master_seed, static_cast<std::uint64_t>(index));
            so.rtol = sc.solver.rtol;
            so.atol = sc.solver.atol;
            so.guard = sc.solver.guard;
            so.renorm_dt = std::max(sc.solver.cadence, sc.solver.horizon / 200.0);
            SeparationResult sep = separation_exponent(sc.domain, ac, sc.schedule, u0,
                                                       0.0, sc.solver.horizon, so);
            row.separation = sep.exponent;
        }
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

} // namespace detail

/// Run every cell of the sweep grid. Cells are independent; `parallelism`
/// worker threads pull cells from an atomic counter and write into
/// index-keyed slots, so the output is identical for any worker count.
inline SweepResult run_sweep(const SweepSpec& spec, std::uint64_t master_seed,
                             int parallelism = 1) {
    IniDoc base = IniDoc::parse_file(spec.scenario_path);
    long cells = 1;
    for (const auto& ax : spec.axes) cells *= ax.count;

    SweepResult result;
    result.record_separation = spec.record_separation;
    for (const auto& ax : spec.axes) result.axis_labels.push_back(ax.label);
    result.rows.resize(cells);

    auto coord_of = [&](int index) {
        std::vector<int> c(spec.axes.size(), 0);
        int rem = index;
        for (std::size_t a = spec.axes.size(); a-- > 0;) {
            c[a] = rem % spec.axes[a].count;
            rem /= spec.axes[a].count;
        }
        return c;
    };

    std::atomic<long> next{0};
    auto worker = [&]() {
        for (;;) {
            long i = next.fetch_add(1);
            if (i >= cells) break;
            result.rows[i] = detail::run_cell(spec, base, static_cast<int>(i),
                                              coord_of(static_cast<int>(i)), master_seed);
        }
    };
    int workers = static_cast<int>(std::max<long>(1, std::min<long>(parallelism, cells)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const SweepRow& row : result.rows)
        if (!row.error.empty()) ++result.failed;
    return result;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& result) {
    os << "cell";
    for (const std::string& label : result.axis_labels) os << ',' << label;
    os << ",k0_t1,verdict,slope,r_end";
    if (result.record_separation) os << ",separation_exponent";
    os << ",error\n";
    for (const SweepRow& row : result.rows) {
        os << row.index;
        for (double v : row.axis_values) os << ',' << fmt17(v);
        os << ',' << row.k0_t1 << ',' << row.verdict << ',' << fmt17(row.slope) << ','
           << fmt17(row.r_end);
        if (result.record_separation) os << ',' << fmt17(row.separation);
        os << ',' << row.error << '\n';
    }
}

} // namespace nlrd
