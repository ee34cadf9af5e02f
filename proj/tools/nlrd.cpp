// Command-line front end: scenario runs, blow-up brackets, long-time
// classification, parameter sweeps and the spectral-vs-FD cross check.
//
// Exit codes: 0 bounded/decaying run, 1 integrator failure, 2 configuration
// error, 3 blow-up detected (a scientific result, not a failure).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nlrd/blowup.hpp"
#include "nlrd/energy.hpp"
#include "nlrd/manifest.hpp"
#include "nlrd/oracle.hpp"
#include "nlrd/scenario.hpp"
#include "nlrd/spectral.hpp"
#include "nlrd/sweep.hpp"
#include "nlrd/version.hpp"

namespace fs = std::filesystem;
using namespace nlrd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIntegrator = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBlowup = 3;

struct CommonOpts {
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int modes = 0;
    double horizon = 0.0;
    double cadence = 0.0;
    double tail = 0.0;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--out", c.out_dir, "output directory (default $NLRD_OUT_DIR or ./out)");
    cmd->add_option("--seed", c.seed, "seed override")->each([&c](const std::string&) {
        c.seed_set = true;
    });
    cmd->add_option("--modes", c.modes, "eigenmode truncation override");
    cmd->add_option("--horizon", c.horizon, "time horizon override");
    cmd->add_option("--cadence", c.cadence, "output cadence override");
}

fs::path resolve_out_dir(const CommonOpts& c) {
    if (!c.out_dir.empty()) return c.out_dir;
    if (const char* env = std::getenv("NLRD_OUT_DIR"); env && *env) return env;
    return "out";
}

IniDoc load_with_overrides(const std::string& path, const CommonOpts& c) {
    IniDoc ini = IniDoc::parse_file(path);
    if (c.modes > 0) ini.set("domain", "modes", std::to_string(c.modes));
    if (c.horizon > 0.0) ini.set("solver", "horizon", fmt17(c.horizon));
    if (c.cadence > 0.0) ini.set("solver", "cadence", fmt17(c.cadence));
    if (c.seed_set) ini.set("solver", "seed", std::to_string(c.seed));
    return ini;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << contents;
}

double initial_norm(const std::vector<double>& u0) {
    double s = 0.0;
    for (double v : u0) s += v * v;
    return std::sqrt(s);
}

/// Criterion + bracket at the first recorded state of the degenerate
/// phase, when the run reaches it.
void attach_blowup_analysis(RunArtifacts& art, const Scenario& sc,
                            const TrajectoryRecord& rec) {
    double t1 = sc.schedule.t1();
    if (!std::isfinite(t1) || rec.samples.empty()) return;
    if (t1 > rec.samples.back().t + 1e-12) return;
    const Sample* at_t1 = nullptr;
    for (const Sample& s : rec.samples)
        if (s.t >= t1 - 1e-12) {
            at_t1 = &s;
            break;
        }
    if (!at_t1 || at_t1->u.empty()) return;
    CriterionResult crit = blowup_criterion(at_t1->u, at_t1->t, sc);
    art.criterion = crit;
    if (crit.blowup) {
        EnergyParams ep = energy_params_from(sc);
        BlowupParams bp = blowup_params_from(ep);
        art.bracket = blowup_bracket(at_t1->r * at_t1->r, at_t1->t, bp, ep,
                                     sc.solver.horizon, crit.delta);
    }
}

int cmd_run(const std::string& path, const CommonOpts& common, bool dump_modes,
            bool with_separation, bool write_artifacts, const char* verb) {
    IniDoc ini = load_with_overrides(path, common);
    Scenario sc = scenario_from_ini(ini);
    AveragedCoefficients ac = AveragedCoefficients::from(sc, sc.solver.quad_nodes);
    std::vector<double> u0 = initial_coefficients(sc);

    TrajectoryRecord rec = run_modal(sc.domain, ac, sc.schedule, u0, run_options_from(sc));
    double tail = common.tail > 0.0 ? common.tail : sc.solver.horizon / 5.0;
    if (!rec.blown)
        tail = std::min(tail, rec.samples.back().t - rec.samples.front().t);
    TrajectoryVerdict verdict = classify_trajectory(rec, tail);

    RunArtifacts art;
    art.scenario_hash = fnv1a64_hex(ini.serialize());
    art.seed = sc.solver.seed;
    art.horizon = sc.solver.horizon;
    art.schedule = &sc.schedule;
    art.record = &rec;
    art.verdict = verdict;
    art.solvability = solvability_report(sc, initial_norm(u0));
    attach_blowup_analysis(art, sc, rec);
    if (with_separation) {
        SeparationOptions so;
        so.seed = sc.solver.seed;
        so.rtol = sc.solver.rtol;
        so.atol = sc.solver.atol;
        so.guard = sc.solver.guard;
        so.renorm_dt = std::max(sc.solver.cadence, sc.solver.horizon / 200.0);
        art.separation =
            separation_exponent(sc.domain, ac, sc.schedule, u0, 0.0, sc.solver.horizon, so)
                .exponent;
    }

    if (write_artifacts) {
        fs::path out = resolve_out_dir(common);
        fs::create_directories(out);
        art.trajectory_csv = "trajectory.csv";
        {
            std::ostringstream os;
            write_trajectory_csv(os, rec);
            write_file(out / art.trajectory_csv, os.str());
        }
        if (dump_modes) {
            art.modes_csv = "modes.csv";
            std::ostringstream os;
            write_modes_csv(os, rec);
            write_file(out / art.modes_csv, os.str());
        }
        write_file(out / "manifest.json", build_manifest(art).dump(2) + "\n");
        std::cout << verb << ": wrote " << (out / "manifest.json").string() << "\n";
    }

    std::cout << "verdict: " << verdict_name(verdict.tag);
    if (verdict.tag == VerdictTag::BlowUp)
        std::cout << " (t* = " << fmt17(verdict.t_blowup) << ")";
    else
        std::cout << " (tail slope " << fmt17(verdict.slope) << ", r(T) = "
                  << fmt17(rec.samples.back().r) << ")";
    std::cout << "\n";
    if (art.criterion)
        std::cout << "blow-up criterion at t1: delta = " << fmt17(art.criterion->delta)
                  << (art.criterion->blowup ? " (< 0: blow-up predicted)" : " (>= 0)")
                  << "\n";
    return rec.blown ? kExitBlowup : kExitOk;
}

int cmd_bracket(const std::string& path, const CommonOpts& common) {
    IniDoc ini = load_with_overrides(path, common);
    Scenario sc = scenario_from_ini(ini);
    double t1 = sc.schedule.t1();
    if (!std::isfinite(t1) || t1 > sc.solver.horizon) {
        std::cerr << "bracket: p0 never reaches 0 within the horizon (t1 = "
                  << (std::isfinite(t1) ? fmt17(t1) : "inf") << "); phases:\n";
        for (const PhaseInterval& iv : phase_timeline(sc.schedule, sc.solver.horizon))
            std::cerr << "  [" << fmt17(iv.t_begin) << ", " << fmt17(iv.t_end) << ") "
                      << phase_name(iv.tag) << "\n";
        return kExitConfig;
    }

    AveragedCoefficients ac = AveragedCoefficients::from(sc, sc.solver.quad_nodes);
    std::vector<double> u0 = initial_coefficients(sc);
    std::vector<double> u_t1 = u0;
    double t_at = 0.0;
    if (t1 > 0.0) {
        RunOptions ro = run_options_from(sc);
        ro.horizon = t1;
        ro.cadence = std::min(ro.cadence, t1);
        TrajectoryRecord pre = run_modal(sc.domain, ac, sc.schedule, u0, ro);
        if (pre.blown) {
            std::cout << "blow-up before the degenerate phase at t = "
                      << fmt17(pre.t_blowup) << "\n";
            return kExitBlowup;
        }
        u_t1 = pre.samples.back().u;
        t_at = pre.samples.back().t;
    }

    CriterionResult crit = blowup_criterion(u_t1, t_at, sc);
    std::cout << "criterion delta(t1 = " << fmt17(t_at) << ") = " << fmt17(crit.delta)
              << "\n";
    if (!crit.blowup) {
        std::cout << "no blow-up predicted (delta >= 0)\n";
        return kExitOk;
    }
    double y1 = 0.0;
    for (double v : u_t1) y1 += v * v;
    EnergyParams ep = energy_params_from(sc);
    BlowupParams bp = blowup_params_from(ep);
    auto t_fast = blowup_time_upper(y1, t_at, bp);
    auto t_slow = blowup_time_lower(y1, t_at, bp);
    std::cout << "candidate (a0 l1, G0) time:      "
              << (t_fast ? fmt17(*t_fast) : std::string("none")) << "\n";
    std::cout << "candidate (A0 l1 + B0+F0, g0) time: "
              << (t_slow ? fmt17(*t_slow) : std::string("none")) << "\n";
    BlowupBracket br = blowup_bracket(y1, t_at, bp, ep, sc.solver.horizon, crit.delta);
    if (!br.detected) {
        std::cout << "no blow-up detected within the horizon (criterion delta = "
                  << fmt17(crit.delta) << ")\n";
        return kExitOk;
    }
    std::cout << "bracket: [" << (br.t_lower ? fmt17(*br.t_lower) : std::string("-"))
              << ", " << (br.t_upper ? fmt17(*br.t_upper) : std::string("-")) << "]"
              << "  methods: " << br.method_lower << " / "
              << (br.t_upper ? br.method_upper : std::string("-")) << "\n";

    if (!common.out_dir.empty() || std::getenv("NLRD_OUT_DIR")) {
        fs::path out = resolve_out_dir(common);
        fs::create_directories(out);
        RunArtifacts art;
        art.scenario_hash = fnv1a64_hex(ini.serialize());
        art.seed = sc.solver.seed;
        art.horizon = sc.solver.horizon;
        art.schedule = &sc.schedule;
        art.criterion = crit;
        art.bracket = br;
        art.solvability = solvability_report(sc, initial_norm(u0));
        write_file(out / "bracket.json", build_manifest(art).dump(2) + "\n");
        {
            EnvelopeOptions eo;
            eo.cadence = sc.solver.cadence;
            EnvelopeTrajectory env =
                integrate_envelopes(y1, t_at, ep, sc.solver.horizon, eo);
            std::ostringstream os;
            write_envelope_csv(os, env);
            write_file(out / "envelopes.csv", os.str());
        }
        std::cout << "wrote " << (out / "bracket.json").string() << " and "
                  << (out / "envelopes.csv").string() << "\n";
    }
    return kExitOk;
}

int cmd_sweep(const std::string& path, const CommonOpts& common, int parallel) {
    SweepSpec spec = load_sweep_spec(path);
    std::uint64_t seed = common.seed_set ? common.seed : 0;
    SweepResult result = run_sweep(spec, seed, parallel);

    fs::path out = resolve_out_dir(common);
    fs::create_directories(out);
    std::ostringstream os;
    write_sweep_csv(os, result);
    write_file(out / "sweep.csv", os.str());

    std::cout << "sweep: " << result.rows.size() << " cells, " << result.failed
              << " failed; wrote " << (out / "sweep.csv").string() << "\n";
    if (result.failed == static_cast<long>(result.rows.size())) {
        std::cerr << "sweep: every cell failed";
        if (!result.rows.empty()) std::cerr << " (first: " << result.rows[0].error << ")";
        std::cerr << "\n";
        return kExitIntegrator;
    }
    return kExitOk;
}

int cmd_compare(const std::string& path, const CommonOpts& common, int grid_n,
                const std::string& checkpoints_str) {
    IniDoc ini = load_with_overrides(path, common);
    Scenario sc = scenario_from_ini(ini);
    std::vector<double> checkpoints;
    if (checkpoints_str.empty()) {
        double T = sc.solver.horizon;
        checkpoints = {0.25 * T, 0.5 * T, T};
    } else {
        std::istringstream in(checkpoints_str);
        std::string tok;
        while (std::getline(in, tok, ','))
            checkpoints.push_back(IniDoc::to_double(tok, "compare", "checkpoints"));
    }

    std::cout << "spectral N=" << sc.domain.mode_count() << " vs FD, checkpoints at";
    for (double t : checkpoints) std::cout << ' ' << fmt17(t);
    std::cout << "\n";
    std::cout << "grid      t             l2_diff        max_diff\n";
    for (int n : {grid_n / 4, grid_n / 2, grid_n}) {
        if (n < 8) continue;
        CompareReport rep = compare_solvers(sc, n, checkpoints);
        for (const CompareEntry& e : rep.entries) {
            char line[160];
            std::snprintf(line, sizeof(line), "n=%-6d t=%-12.6g l2=%-12.4e max=%-12.4e\n",
                          n, e.t, e.l2_diff, e.max_diff);
            std::cout << line;
        }
        if (rep.fd_blown || rep.spectral_blown)
            std::cout << "n=" << n << " blow-up: fd "
                      << (rep.fd_blown ? fmt17(rep.fd_t_blowup) : std::string("-"))
                      << ", spectral "
                      << (rep.spectral_blown ? fmt17(rep.spectral_t_blowup)
                                             : std::string("-"))
                      << "\n";
        if (!rep.averaging_exact)
            std::cout << "note: spatially varying coefficients; differences include "
                         "the averaging (modeling) gap\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonlocal reaction-diffusion simulation toolkit"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
    app.require_subcommand(1);

    CommonOpts c_run, c_bracket, c_classify, c_sweep, c_compare;
    std::string p_run, p_bracket, p_classify, p_sweep, p_compare;
    bool dump_modes = false, with_sep = false;
    int parallel = 1, grid_n = 512;
    std::string checkpoints;

    auto* run = app.add_subcommand("run", "integrate a scenario, emit CSV + manifest");
    run->add_option("scenario", p_run, "scenario file")->required();
    add_common(run, c_run);
    run->add_option("--tail", c_run.tail, "classification tail window");
    run->add_flag("--dump-modes", dump_modes, "also write per-mode CSV");
    run->add_flag("--separation", with_sep, "record the separation exponent");

    auto* bracket = app.add_subcommand("bracket", "blow-up criterion and time bracket");
    bracket->add_option("scenario", p_bracket, "scenario file")->required();
    add_common(bracket, c_bracket);

    auto* classify = app.add_subcommand("classify", "long-time verdict only");
    classify->add_option("scenario", p_classify, "scenario file")->required();
    add_common(classify, c_classify);
    classify->add_option("--tail", c_classify.tail, "classification tail window");

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep grid");
    sweep->add_option("spec", p_sweep, "sweep spec file")->required();
    add_common(sweep, c_sweep);
    sweep->add_option("--parallel", parallel, "worker threads");

    auto* compare = app.add_subcommand("compare", "spectral vs finite-difference oracle");
    compare->add_option("scenario", p_compare, "scenario file")->required();
    add_common(compare, c_compare);
    compare->add_option("--grid", grid_n, "finest FD interior node count");
    compare->add_option("--checkpoints", checkpoints, "comma-separated times");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(p_run, c_run, dump_modes, with_sep, true, "run");
        if (bracket->parsed()) return cmd_bracket(p_bracket, c_bracket);
        if (classify->parsed())
            return cmd_run(p_classify, c_classify, false, false, false, "classify");
        if (sweep->parsed()) return cmd_sweep(p_sweep, c_sweep, parallel);
        if (compare->parsed()) return cmd_compare(p_compare, c_compare, grid_n, checkpoints);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const PhaseError& e) {
        std::cerr << "phase error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ProjectionError& e) {
        std::cerr << "projection error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IntegratorError& e) {
        std::cerr << "integrator failure: " << e.what() << "\n";
        return kExitIntegrator;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIntegrator;
    }
    return kExitConfig;
}
