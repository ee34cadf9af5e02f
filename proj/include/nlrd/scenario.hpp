#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nlrd/domain.hpp"
#include "nlrd/errors.hpp"
#include "nlrd/exponents.hpp"
#include "nlrd/fields.hpp"

namespace nlrd {

struct SolverConfig {
    double horizon = 10.0;
    double rtol = 1e-9;
    double atol = 1e-12;
    double cadence = 0.01;
    double guard = 1e6; // blow-up guard on r = ||u||
    int quad_nodes = 256;
    double proj_tol = 1e-3; // relative Parseval defect tolerance
    std::uint64_t seed = 0;
};

struct InitialData {
    enum class Kind { Modes, Field };
    Kind kind = Kind::Modes;
    std::vector<double> coefficients; // Kind::Modes
    std::string field_form;           // parabola | sine | mode
    std::vector<double> field_params;
    double scale_to_r0 = 0.0; // > 0: rescale so ||u0||_{L2} = r0
};

struct Scenario {
    SpectralDomain domain;
    CoefficientSet coeffs;
    ExponentSchedule schedule;
    InitialData initial;
    SolverConfig solver;
};

/// Minimal INI document: [section] headers, key = value lines, '#' or ';'
/// comments. Values keep their raw text; multi-parameter values are
/// whitespace separated.
class IniDoc {
public:
    static IniDoc parse(std::istream& in) {
        IniDoc doc;
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = strip(line);
            if (s.empty() || s[0] == '#' || s[0] == ';') continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw ConfigError("ini: malformed section header at line " +
                                      std::to_string(lineno));
                section = strip(s.substr(1, s.size() - 2));
                doc.sections_[section]; // ensure section exists
                continue;
            }
            auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("ini: expected key = value at line " +
                                  std::to_string(lineno));
            std::string key = strip(s.substr(0, eq));
            std::string val = strip(s.substr(eq + 1));
            if (key.empty()) throw ConfigError("ini: empty key at line " + std::to_string(lineno));
            doc.sections_[section][key] = val;
        }
        return doc;
    }

    static IniDoc parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        return parse(in);
    }

    bool has(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    std::string get(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        if (s == sections_.end() || !s->second.count(key))
            throw ConfigError("config: missing [" + section + "] " + key);
        return s->second.at(key);
    }

    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const {
        return has(section, key) ? get(section, key) : fallback;
    }

    double get_double(const std::string& section, const std::string& key) const {
        return to_double(get(section, key), section, key);
    }

    double get_double_or(const std::string& section, const std::string& key,
                         double fallback) const {
        return has(section, key) ? get_double(section, key) : fallback;
    }

    void set(const std::string& section, const std::string& key, const std::string& val) {
        sections_[section][key] = val;
    }

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

    /// Canonical text form (sections and keys in sorted order); used for
    /// hashing the effective configuration.
    std::string serialize() const {
        std::ostringstream os;
        for (const auto& [section, kv] : sections_) {
            os << '[' << section << "]\n";
            for (const auto& [key, value] : kv) os << key << " = " << value << '\n';
        }
        return os.str();
    }

    static std::vector<std::string> tokens(const std::string& value) {
        std::istringstream in(value);
        std::vector<std::string> out;
        std::string tok;
        while (in >> tok) out.push_back(tok);
        return out;
    }

    static double to_double(const std::string& text, const std::string& section,
                            const std::string& key) {
        try {
            std::size_t pos = 0;
            double v = std::stod(text, &pos);
            if (pos != text.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config: [" + section + "] " + key +
                              " is not a number: '" + text + "'");
        }
    }

private:
    static std::string strip(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::map<std::string, std::string>> sections_;
};

namespace detail {

inline double num_at(const std::vector<std::string>& toks, std::size_t i,
                     const std::string& what) {
    if (i >= toks.size()) throw ConfigError("config: " + what + ": missing parameter");
    try {
        return std::stod(toks[i]);
    } catch (const std::exception&) {
        throw ConfigError("config: " + what + ": bad number '" + toks[i] + "'");
    }
}

inline SpatialField parse_spatial(const std::string& value, const std::string& what) {
    auto toks = IniDoc::tokens(value);
    if (toks.empty()) throw ConfigError("config: " + what + ": empty field spec");
    const std::string& form = toks[0];
    if (form == "constant") return SpatialField::constant(num_at(toks, 1, what));
    if (form == "affine")
        return SpatialField::affine(num_at(toks, 1, what), num_at(toks, 2, what),
                                    toks.size() > 3 ? num_at(toks, 3, what) : 0.0);
    if (form == "sine_bump")
        return SpatialField::sine_bump(num_at(toks, 1, what), num_at(toks, 2, what));
    throw ConfigError("config: " + what + ": unknown spatial form '" + form + "'");
}

inline TimeFactor parse_time_factor(const std::string& value, const std::string& what) {
    auto toks = IniDoc::tokens(value);
    if (toks.empty()) throw ConfigError("config: " + what + ": empty time factor");
    const std::string& form = toks[0];
    if (form == "constant") return TimeFactor::constant(num_at(toks, 1, what));
    if (form == "relax")
        return TimeFactor::relax(num_at(toks, 1, what), num_at(toks, 2, what),
                                 num_at(toks, 3, what));
    throw ConfigError("config: " + what + ": unknown time factor '" + form + "'");
}

inline ExponentFunction parse_p0(const std::string& value, double p_total) {
    auto toks = IniDoc::tokens(value);
    if (toks.empty()) throw ConfigError("config: [exponents] p0: empty spec");
    const std::string& form = toks[0];
    const double amp = p_total - 1.0;
    if (form == "constant") return ExponentFunction::constant(num_at(toks, 1, "p0"));
    if (form == "exp_relax") return ExponentFunction::exp_relax(amp, num_at(toks, 1, "p0"));
    if (form == "linear_clamp")
        return ExponentFunction::linear_clamp(amp, num_at(toks, 1, "p0"));
    if (form == "zero") return ExponentFunction::zero();
    throw ConfigError("config: [exponents] p0: unknown form '" + form + "'");
}

inline ExponentFunction parse_p1(const std::string& value) {
    auto toks = IniDoc::tokens(value);
    if (toks.empty()) throw ConfigError("config: [exponents] p1: empty spec");
    const std::string& form = toks[0];
    if (form == "constant") return ExponentFunction::constant(num_at(toks, 1, "p1"));
    if (form == "saturate")
        return ExponentFunction::saturate(num_at(toks, 1, "p1"), num_at(toks, 2, "p1"));
    if (form == "linear")
        return ExponentFunction::linear(num_at(toks, 1, "p1"), num_at(toks, 2, "p1"));
    if (form == "piecewise") {
        if ((toks.size() - 1) % 2 != 0)
            throw ConfigError("config: [exponents] p1 piecewise: need t v pairs");
        std::vector<double> ts, vs;
        for (std::size_t i = 1; i + 1 < toks.size(); i += 2) {
            ts.push_back(num_at(toks, i, "p1"));
            vs.push_back(num_at(toks, i + 1, "p1"));
        }
        return ExponentFunction::piecewise(std::move(ts), std::move(vs));
    }
    throw ConfigError("config: [exponents] p1: unknown form '" + form + "'");
}

} // namespace detail

inline Scenario scenario_from_ini(const IniDoc& ini) {
    // [domain]
    const std::string kind = ini.get_or("domain", "kind", "interval");
    const int modes = static_cast<int>(ini.get_double_or("domain", "modes", 64));
    SpectralDomain domain = SpectralDomain::interval(1.0, 1);
    if (kind == "interval")
        domain = SpectralDomain::interval(ini.get_double("domain", "length"), modes);
    else if (kind == "rectangle")
        domain = SpectralDomain::rectangle(ini.get_double("domain", "lx"),
                                           ini.get_double("domain", "ly"), modes);
    else
        throw ConfigError("config: [domain] kind must be interval or rectangle");

    // [solver]
    SolverConfig solver;
    solver.horizon = ini.get_double_or("solver", "horizon", solver.horizon);
    if (solver.horizon <= 0.0) throw ConfigError("config: [solver] horizon must be > 0");
    solver.rtol = ini.get_double_or("solver", "rtol", solver.rtol);
    solver.atol = ini.get_double_or("solver", "atol", solver.atol);
    solver.cadence = ini.get_double_or("solver", "cadence", solver.cadence);
    if (solver.cadence <= 0.0) throw ConfigError("config: [solver] cadence must be > 0");
    solver.guard = ini.get_double_or("solver", "guard", solver.guard);
    solver.quad_nodes =
        static_cast<int>(ini.get_double_or("solver", "quad_nodes", solver.quad_nodes));
    solver.proj_tol = ini.get_double_or("solver", "proj_tol", solver.proj_tol);
    solver.seed = static_cast<std::uint64_t>(ini.get_double_or("solver", "seed", 0));

    // [exponents]
    const double p_total = ini.get_double("exponents", "p");
    ExponentFunction p0 = detail::parse_p0(ini.get("exponents", "p0"), p_total);
    ExponentFunction p1 = detail::parse_p1(ini.get("exponents", "p1"));
    ExponentSchedule schedule(p0, p1, p_total, solver.horizon);

    // [coefficients]
    SpatialField a = detail::parse_spatial(ini.get("coefficients", "a"), "[coefficients] a");
    SpatialField b = detail::parse_spatial(ini.get("coefficients", "b"), "[coefficients] b");
    SpaceTimeField f{detail::parse_spatial(ini.get("coefficients", "f"), "[coefficients] f"),
                     detail::parse_time_factor(ini.get_or("coefficients", "f_time", "constant 1"),
                                               "[coefficients] f_time")};
    SpaceTimeField g{detail::parse_spatial(ini.get("coefficients", "g"), "[coefficients] g"),
                     detail::parse_time_factor(ini.get_or("coefficients", "g_time", "constant 1"),
                                               "[coefficients] g_time")};
    const bool from_t1 = p0.family() == ExponentFunction::Family::Zero;
    CoefficientSet coeffs =
        CoefficientSet::make(domain, a, b, f, g, solver.horizon, 1024, 256, !from_t1);

    // [initial]
    InitialData initial;
    const std::string init_kind = ini.get_or("initial", "kind", "modes");
    if (init_kind == "modes") {
        initial.kind = InitialData::Kind::Modes;
        auto toks = IniDoc::tokens(ini.get("initial", "values"));
        for (std::size_t i = 0; i < toks.size(); ++i)
            initial.coefficients.push_back(detail::num_at(toks, i, "[initial] values"));
        if (initial.coefficients.empty())
            throw ConfigError("config: [initial] values: need at least one coefficient");
        if (static_cast<int>(initial.coefficients.size()) > domain.mode_count())
            throw ConfigError("config: [initial] more coefficients than domain modes");
    } else if (init_kind == "field") {
        initial.kind = InitialData::Kind::Field;
        auto toks = IniDoc::tokens(ini.get("initial", "form"));
        if (toks.empty()) throw ConfigError("config: [initial] form: empty");
        initial.field_form = toks[0];
        for (std::size_t i = 1; i < toks.size(); ++i)
            initial.field_params.push_back(detail::num_at(toks, i, "[initial] form"));
        if (initial.field_form != "parabola" && initial.field_form != "sine" &&
            initial.field_form != "mode")
            throw ConfigError("config: [initial] form must be parabola, sine or mode");
    } else {
        throw ConfigError("config: [initial] kind must be modes or field");
    }
    initial.scale_to_r0 = ini.get_double_or("initial", "scale_to_r0", 0.0);

    return Scenario{std::move(domain), std::move(coeffs), std::move(schedule),
                    std::move(initial), solver};
}

inline Scenario load_scenario(const std::string& path) {
    return scenario_from_ini(IniDoc::parse_file(path));
}

/// Evaluable closed-form initial field for Kind::Field scenarios.
inline std::function<double(Point)> initial_field_function(const Scenario& sc) {
    const auto& init = sc.initial;
    const auto& dom = sc.domain;
    auto param = [&](std::size_t i, double fallback) {
        return i < init.field_params.size() ? init.field_params[i] : fallback;
    };
    if (init.field_form == "parabola") {
        double amp = param(0, 1.0);
        if (dom.kind() == DomainKind::Interval)
            return [amp, L = dom.lx()](Point p) { return amp * p.x * (L - p.x); };
        return [amp, Lx = dom.lx(), Ly = dom.ly()](Point p) {
            return amp * p.x * (Lx - p.x) * p.y * (Ly - p.y);
        };
    }
    if (init.field_form == "sine") {
        double amp = param(0, 1.0);
        int k = static_cast<int>(param(1, 1.0));
        if (dom.kind() == DomainKind::Interval)
            return [amp, k, L = dom.lx()](Point p) { return amp * std::sin(k * M_PI * p.x / L); };
        return [amp, k, Lx = dom.lx(), Ly = dom.ly()](Point p) {
            return amp * std::sin(k * M_PI * p.x / Lx) * std::sin(k * M_PI * p.y / Ly);
        };
    }
    throw ConfigError("initial field form has no closed form: " + init.field_form);
}

/// Initial eigenmode coefficient vector: copied (modes), set exactly
/// (mode form), or projected by quadrature (other field forms); then
/// optionally rescaled to the requested L2 norm.
inline std::vector<double> initial_coefficients(const Scenario& sc) {
    std::vector<double> u(static_cast<std::size_t>(sc.domain.mode_count()), 0.0);
    if (sc.initial.kind == InitialData::Kind::Modes) {
        for (std::size_t i = 0; i < sc.initial.coefficients.size(); ++i)
            u[i] = sc.initial.coefficients[i];
    } else if (sc.initial.field_form == "mode") {
        double amp = sc.initial.field_params.empty() ? 1.0 : sc.initial.field_params[0];
        int k = sc.initial.field_params.size() > 1
                    ? static_cast<int>(sc.initial.field_params[1])
                    : 1;
        if (k < 1 || k > sc.domain.mode_count())
            throw ConfigError("config: [initial] mode index out of range");
        u[k - 1] = amp;
    } else {
        Projection proj = project_initial(initial_field_function(sc), sc.domain,
                                          sc.solver.quad_nodes, sc.solver.proj_tol);
        u = std::move(proj.coefficients);
    }
    double norm_sq = 0.0;
    for (double v : u) {
        if (!std::isfinite(v)) throw ConfigError("initial data: non-finite coefficient");
        norm_sq += v * v;
    }
    if (sc.initial.scale_to_r0 > 0.0) {
        if (norm_sq == 0.0)
            throw ConfigError("initial data: cannot rescale the zero vector");
        double s = sc.initial.scale_to_r0 / std::sqrt(norm_sq);
        for (double& v : u) v *= s;
    }
    return u;
}

} // namespace nlrd
