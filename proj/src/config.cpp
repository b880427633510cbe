#include "afem/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "afem/error.hpp"

namespace afem {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(std::string_view v, std::string_view key, int line) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(x)) {
        throw ConfigError(fmt::format("line {}: {} expects a number, got '{}'", line, key, v), line);
    }
    return x;
}

long long parse_integer(std::string_view v, std::string_view key, int line) {
    long long x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        throw ConfigError(fmt::format("line {}: {} expects an integer, got '{}'", line, key, v), line);
    }
    return x;
}

bool parse_bool(std::string_view v, std::string_view key, int line) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError(fmt::format("line {}: {} expects true or false, got '{}'", line, key, v), line);
}

std::string fmt_double(double x) { return fmt::format("{:.17g}", x); }

struct Field {
    std::string section;
    std::string key;
    const char* origin;
    std::function<void(RunConfig&, std::string_view, int)> set;
    std::function<std::optional<std::string>(const RunConfig&)> get;
};

template <class T>
Field number(const char* sec, const char* key, T RunConfig::*m, const char* origin) {
    Field f{sec, key, origin, {}, {}};
    f.set = [m, key](RunConfig& c, std::string_view v, int line) {
        if constexpr (std::is_same_v<T, double>) {
            c.*m = parse_double(v, key, line);
        } else {
            c.*m = static_cast<T>(parse_integer(v, key, line));
        }
    };
    f.get = [m](const RunConfig& c) -> std::optional<std::string> {
        if constexpr (std::is_same_v<T, double>) return fmt_double(c.*m);
        else return fmt::format("{}", c.*m);
    };
    return f;
}

Field optional_number(const char* sec, const char* key, std::optional<double> RunConfig::*m,
                      const char* origin) {
    Field f{sec, key, origin, {}, {}};
    f.set = [m, key](RunConfig& c, std::string_view v, int line) { c.*m = parse_double(v, key, line); };
    f.get = [m](const RunConfig& c) -> std::optional<std::string> {
        if (!(c.*m)) return std::nullopt;
        return fmt_double(*(c.*m));
    };
    return f;
}

Field boolean(const char* sec, const char* key, bool RunConfig::*m, const char* origin) {
    Field f{sec, key, origin, {}, {}};
    f.set = [m, key](RunConfig& c, std::string_view v, int line) { c.*m = parse_bool(v, key, line); };
    f.get = [m](const RunConfig& c) -> std::optional<std::string> { return c.*m ? "true" : "false"; };
    return f;
}

template <class E>
Field choice(const char* sec, const char* key, E RunConfig::*m, std::vector<std::pair<std::string, E>> names,
             const char* origin) {
    Field f{sec, key, origin, {}, {}};
    f.set = [m, key, names](RunConfig& c, std::string_view v, int line) {
        for (const auto& [n, e] : names) {
            if (n == v) {
                c.*m = e;
                return;
            }
        }
        std::string allowed;
        for (const auto& [n, e] : names) allowed += (allowed.empty() ? "" : ", ") + n;
        throw ConfigError(fmt::format("line {}: {} must be one of {}, got '{}'", line, key, allowed, v), line);
    };
    f.get = [m, names](const RunConfig& c) -> std::optional<std::string> {
        for (const auto& [n, e] : names)
            if (e == c.*m) return n;
        return std::nullopt;
    };
    return f;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        using C = RunConfig;
        constexpr const char* exp = "experiment";
        constexpr const char* asn = "assumption";
        std::vector<Field> t;
        t.push_back(number("mesh", "domain_size", &C::domain_size, exp));
        t.push_back(number("mesh", "n0", &C::n0, asn));
        t.push_back(number("mesh", "max_levels", &C::max_levels, exp));
        t.push_back(boolean("mesh", "slit", &C::slit, exp));
        t.push_back(number("mesh", "slit_x_begin", &C::slit_x_begin, exp));
        t.push_back(number("mesh", "slit_x_end", &C::slit_x_end, exp));
        t.push_back(number("mesh", "slit_y", &C::slit_y, exp));
        t.push_back(number("material", "mu", &C::mu, asn));
        t.push_back(number("material", "kappa", &C::kappa, exp));
        t.push_back(number("material", "lambda_c", &C::lambda_c, exp));
        t.push_back(number("material", "c_w", &C::c_w, exp));
        t.push_back(optional_number("material", "epsilon", &C::epsilon, exp));
        t.push_back(optional_number("material", "density", &C::density, exp));
        t.push_back(optional_number("material", "viscosity", &C::viscosity, exp));
        t.push_back(number("loading", "eps_v", &C::eps_v, exp));
        t.push_back(number("loading", "t_s", &C::t_s, asn));
        t.push_back(optional_number("loading", "t_g", &C::t_g, asn));
        t.push_back(number("time", "steps", &C::steps, exp));
        t.push_back(number("time", "t_final", &C::t_final, asn));
        t.push_back(number("tolerances", "xi_v", &C::xi_v, exp));
        t.push_back(number("tolerances", "xi_cr", &C::xi_cr, exp));
        t.push_back(number("tolerances", "xi_vn", &C::xi_vn, exp));
        t.push_back(number("tolerances", "xi_rf", &C::xi_rf, exp));
        t.push_back(number("tolerances", "solver_tol", &C::solver_tol, asn));
        t.push_back(number("tolerances", "solver_max_iter", &C::solver_max_iter, asn));
        t.push_back(number("tolerances", "max_inner_iters", &C::max_inner_iters, asn));
        t.push_back(choice<MarkingStrategy>("marking", "strategy", &C::strategy,
                                            {{"fraction", MarkingStrategy::Fraction},
                                             {"dorfler", MarkingStrategy::Dorfler}},
                                            exp));
        t.push_back(number("marking", "theta", &C::theta, asn));
        t.push_back(number("marking", "refine_fraction", &C::refine_fraction, exp));
        t.push_back(number("marking", "coarsen_fraction", &C::coarsen_fraction, exp));
        t.push_back(number("marking", "cell_threshold", &C::cell_threshold, exp));
        t.push_back(boolean("marking", "adapt", &C::adapt, exp));
        t.push_back(choice<PhaseFieldMode>("solver", "phasefield", &C::phasefield_mode,
                                           {{"obstacle", PhaseFieldMode::UpperObstacle},
                                            {"linear", PhaseFieldMode::Linear}},
                                           asn));
        t.push_back(choice<JumpKind>("solver", "estimator_jump", &C::estimator_jump,
                                     {{"magnitude", JumpKind::GradientMagnitude},
                                      {"normal", JumpKind::NormalFlux}},
                                     exp));
        t.push_back(boolean("solver", "skip_constrained", &C::skip_constrained, asn));
        t.push_back(number("solver", "seed", &C::seed, asn));
        Field dir{"output", "dir", asn, {}, {}};
        dir.set = [](C& c, std::string_view v, int) { c.output_dir = std::string(v); };
        dir.get = [](const C& c) -> std::optional<std::string> { return c.output_dir; };
        t.push_back(dir);
        t.push_back(number("output", "snapshot_every", &C::snapshot_every, asn));
        t.push_back(boolean("output", "final_snapshot", &C::write_final_snapshot, asn));
        return t;
    }();
    return table;
}

const Field* find_field(std::string_view section, std::string_view key) {
    for (const auto& f : fields())
        if (f.section == section && f.key == key) return &f;
    return nullptr;
}

// Parses text and returns the keys it set.
std::set<std::string> parse_into(std::string_view text, RunConfig& cfg) {
    std::set<std::string> seen;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto hash = raw.find_first_of("#;");
        std::string_view line = trim(raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(fmt::format("line {}: malformed section header", line_no), line_no);
            section = std::string(trim(line.substr(1, line.size() - 2)));
            bool known = false;
            for (const auto& f : fields()) known = known || f.section == section;
            if (!known) throw ConfigError(fmt::format("line {}: unknown section [{}]", line_no, section), line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(fmt::format("line {}: expected key = value", line_no), line_no);
        }
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (section.empty()) {
            throw ConfigError(fmt::format("line {}: key '{}' outside any section", line_no, key), line_no);
        }
        const Field* f = find_field(section, key);
        if (!f) throw ConfigError(fmt::format("line {}: unknown key '{}' in [{}]", line_no, key, section), line_no);
        const std::string full = section + "." + std::string(key);
        if (!seen.insert(full).second) {
            throw ConfigError(fmt::format("line {}: key '{}' set twice", line_no, full), line_no);
        }
        f->set(cfg, value, line_no);
    }
    return seen;
}

} // namespace

double RunConfig::h_f() const { return domain_size / (n0 * std::ldexp(1.0, max_levels)); }

std::optional<Slit> RunConfig::slit_geometry() const {
    if (!slit) return std::nullopt;
    return Slit{slit_x_begin, slit_x_end, slit_y};
}

MaterialParams RunConfig::material() const {
    const double hf = h_f();
    MaterialParams p;
    p.mu = mu;
    p.kappa = kappa;
    p.lambda_c = lambda_c;
    p.c_w = c_w;
    p.epsilon = epsilon.value_or(5.0 * hf);
    p.density = density.value_or(10.0 * std::sqrt(hf));
    p.viscosity = viscosity.value_or(1.0 / (10.0 * std::sqrt(hf)));
    return p;
}

LoadingParams RunConfig::loading() const {
    return {eps_v, t_s, t_g.value_or(t_final), slit ? slit_y : 0.5 * domain_size};
}

void RunConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (!(domain_size > 0.0)) fail("mesh.domain_size must be positive");
    if (n0 < 1) fail(fmt::format("mesh.n0 must be at least 1, got {}", n0));
    if (max_levels < 0 || max_levels > 12) fail(fmt::format("mesh.max_levels must lie in [0, 12], got {}", max_levels));
    if (steps < 1) fail(fmt::format("time.steps must be at least 1, got {}", steps));
    if (!(t_final > 0.0)) fail("time.t_final must be positive");
    if (!(t_s > 0.0)) fail("loading.t_s must be positive");
    const double tg = t_g.value_or(t_final);
    if (!(t_s < tg)) fail("loading.t_s must be below loading.t_g");
    if (tg < t_final) fail("loading.t_g must cover the whole run (t_g >= t_final)");
    for (auto [name, x] : {std::pair{"xi_v", xi_v}, {"xi_cr", xi_cr}, {"xi_vn", xi_vn}, {"xi_rf", xi_rf},
                           {"solver_tol", solver_tol}}) {
        if (!(x > 0.0)) fail(fmt::format("tolerances.{} must be positive", name));
    }
    if (!(solver_tol < 1.0)) fail("tolerances.solver_tol must be below 1");
    if (solver_max_iter < 1) fail("tolerances.solver_max_iter must be at least 1");
    if (max_inner_iters < 1) fail("tolerances.max_inner_iters must be at least 1");
    if (!(theta > 0.0 && theta <= 1.0)) fail("marking.theta must lie in (0, 1]");
    if (!(refine_fraction >= 0.0 && coarsen_fraction >= 0.0 && refine_fraction + coarsen_fraction <= 1.0)) {
        fail("marking fractions must be non-negative and sum to at most 1");
    }
    if (!(cell_threshold >= 0.0)) fail("marking.cell_threshold must be non-negative");
    if (snapshot_every < 0) fail("output.snapshot_every must be non-negative");
    material().validate();
}

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    parse_into(text, cfg);
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config file {}", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()), e.line);
    }
}

std::string write_config(const RunConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            section = f.section;
            out += fmt::format("{}[{}]\n", out.empty() ? "" : "\n", section);
        }
        if (auto v = f.get(cfg)) out += fmt::format("{} = {}\n", f.key, *v);
    }
    return out;
}

std::vector<DefaultNote> defaults_used(std::string_view text) {
    RunConfig cfg;
    const auto seen = parse_into(text, cfg);
    std::vector<DefaultNote> notes;
    for (const auto& f : fields()) {
        const std::string full = f.section + "." + f.key;
        if (seen.count(full)) continue;
        notes.push_back({full, f.get(cfg).value_or("derived"), f.origin});
    }
    return notes;
}

} // namespace afem
