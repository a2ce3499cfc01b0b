#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "inversion.hpp"
#include "phantoms.hpp"
#include "transport.hpp"

namespace umblt {

/**
 * Values of the experiment configuration format: scalars, lists [a, b, ...]
 * and inline maps {key: value, ...}. A bare key inside a map (e.g.
 * {shepp_logan}) stands for {shepp_logan: true}.
 */
struct ConfigValue {
    enum class Type { scalar, list, map };

    Type type = Type::scalar;
    std::string scalar;
    std::vector<ConfigValue> list;
    std::vector<std::pair<std::string, ConfigValue>> entries; // map, insertion order

    bool is_scalar() const { return type == Type::scalar; }
    bool is_list() const { return type == Type::list; }
    bool is_map() const { return type == Type::map; }

    double as_double() const {
        if (!is_scalar()) throw config_error("config: expected a number, got a compound value");
        size_t pos = 0;
        double v = 0;
        try {
            v = std::stod(scalar, &pos);
        } catch (const std::exception&) {
            throw config_error("config: not a number: '" + scalar + "'");
        }
        if (pos != scalar.size()) throw config_error("config: not a number: '" + scalar + "'");
        return v;
    }
    long long as_int() const {
        const double v = as_double();
        const long long n = static_cast<long long>(v);
        if (static_cast<double>(n) != v) throw config_error("config: expected an integer: '" + scalar + "'");
        return n;
    }
    bool as_bool() const {
        if (scalar == "true" || scalar == "yes" || scalar == "on" || scalar == "1") return true;
        if (scalar == "false" || scalar == "no" || scalar == "off" || scalar == "0") return false;
        throw config_error("config: expected a boolean: '" + scalar + "'");
    }
    const std::string& as_string() const {
        if (!is_scalar()) throw config_error("config: expected a string, got a compound value");
        return scalar;
    }

    const ConfigValue* find(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return &v;
        return nullptr;
    }
    const ConfigValue& at(const std::string& key) const {
        const ConfigValue* v = find(key);
        if (!v) throw config_error("config: missing key '" + key + "'");
        return *v;
    }
};

namespace detail {

inline void skip_ws(const std::string& s, size_t& p) {
    while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
}

inline std::string parse_token(const std::string& s, size_t& p) {
    skip_ws(s, p);
    if (p < s.size() && s[p] == '"') {
        size_t end = s.find('"', p + 1);
        if (end == std::string::npos) throw config_error("config: unterminated string");
        std::string out = s.substr(p + 1, end - p - 1);
        p = end + 1;
        return out;
    }
    size_t start = p;
    while (p < s.size() && s[p] != ',' && s[p] != ']' && s[p] != '}' && s[p] != ':') ++p;
    std::string out = s.substr(start, p - start);
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    return out;
}

inline ConfigValue parse_value(const std::string& s, size_t& p);

inline ConfigValue parse_map(const std::string& s, size_t& p) {
    ConfigValue v;
    v.type = ConfigValue::Type::map;
    ++p; // '{'
    skip_ws(s, p);
    if (p < s.size() && s[p] == '}') {
        ++p;
        return v;
    }
    while (true) {
        std::string key = parse_token(s, p);
        if (key.empty()) throw config_error("config: empty key in map");
        skip_ws(s, p);
        if (p < s.size() && s[p] == ':') {
            ++p;
            v.entries.emplace_back(key, parse_value(s, p));
        } else {
            ConfigValue flag;
            flag.scalar = "true";
            v.entries.emplace_back(key, flag);
        }
        skip_ws(s, p);
        if (p < s.size() && s[p] == ',') {
            ++p;
            continue;
        }
        if (p < s.size() && s[p] == '}') {
            ++p;
            return v;
        }
        throw config_error("config: malformed map near '" + s.substr(p) + "'");
    }
}

inline ConfigValue parse_list(const std::string& s, size_t& p) {
    ConfigValue v;
    v.type = ConfigValue::Type::list;
    ++p; // '['
    skip_ws(s, p);
    if (p < s.size() && s[p] == ']') {
        ++p;
        return v;
    }
    while (true) {
        v.list.push_back(parse_value(s, p));
        skip_ws(s, p);
        if (p < s.size() && s[p] == ',') {
            ++p;
            continue;
        }
        if (p < s.size() && s[p] == ']') {
            ++p;
            return v;
        }
        throw config_error("config: malformed list near '" + s.substr(p) + "'");
    }
}

inline ConfigValue parse_value(const std::string& s, size_t& p) {
    skip_ws(s, p);
    if (p >= s.size()) throw config_error("config: missing value");
    if (s[p] == '{') return parse_map(s, p);
    if (s[p] == '[') return parse_list(s, p);
    ConfigValue v;
    v.scalar = parse_token(s, p);
    return v;
}

} // namespace detail

/// key = value lines with optional [section] headers; '#' starts a comment.
/// Keys inside a section are stored as "section.key".
inline std::map<std::string, ConfigValue> parse_config_text(const std::string& text) {
    std::map<std::string, ConfigValue> out;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        size_t p = 0;
        detail::skip_ws(line, p);
        if (p >= line.size()) continue;
        if (line[p] == '[') {
            size_t end = line.find(']', p);
            if (end == std::string::npos)
                throw config_error("config: bad section header at line " + std::to_string(lineno));
            section = line.substr(p + 1, end - p - 1);
            continue;
        }
        size_t eq = line.find('=', p);
        if (eq == std::string::npos)
            throw config_error("config: expected 'key = value' at line " + std::to_string(lineno));
        std::string key = line.substr(p, eq - p);
        while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
        if (key.empty()) throw config_error("config: empty key at line " + std::to_string(lineno));
        size_t vp = eq + 1;
        try {
            ConfigValue value = detail::parse_value(line, vp);
            detail::skip_ws(line, vp);
            if (vp != line.size())
                throw config_error("config: trailing characters after value");
            out[section.empty() ? key : section + "." + key] = std::move(value);
        } catch (const config_error& e) {
            throw config_error(std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
        }
    }
    return out;
}

inline std::map<std::string, ConfigValue> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

/// Attenuation specification: affine coefficients or a field loaded from CSV.
struct SigmaSpec {
    bool affine = true;
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    std::string csv_path;
};

struct KernelSpec {
    bool henyey_greenstein = true; // false = no scattering
    double g = 0.5;
};

enum class InversionMethod { neumann, fredholm };

/**
 * Full description of one reconstruction experiment: domain, grids,
 * medium, sources, adjoint boundary data, inversion method, noise levels
 * and output locations.
 */
struct ExperimentConfig {
    double x1_min = 0.0, x1_max = 1.0, x2_min = 0.0, x2_max = 1.0;
    int forward_nx = 121, forward_ny = 121;
    int recon_nx = 61, recon_ny = 61;
    int directions = 8;

    SigmaSpec sigma;
    KernelSpec kernel;
    std::vector<PhantomSpec> sources;

    double v0_boundary = 1.0;
    InversionMethod method = InversionMethod::neumann;
    std::vector<double> noise_levels{0.0, 0.01, 0.02, 0.05};
    uint64_t seed = 7;
    bool seed_set = true;

    SolverSettings solver;
    NeumannOptions neumann;
    double fredholm_svd_threshold = 1e-10;
    bool fredholm_polynomials = true;
    bool fredholm_pyramids = true;

    std::string out_dir = "out";
    std::string cache_dir = "cache";
    bool write_pgm = false;

    Grid2D forward_grid() const {
        return Grid2D(forward_nx, forward_ny, x1_min, x1_max, x2_min, x2_max);
    }
    Grid2D recon_grid() const { return Grid2D(recon_nx, recon_ny, x1_min, x1_max, x2_min, x2_max); }

    void validate() const {
        forward_grid();
        recon_grid();
        if (directions < 2) throw config_error("config: directions must be >= 2");
        if (sources.empty()) throw config_error("config: at least one source is required");
        bool noisy = false;
        for (double n : noise_levels) {
            if (!(n >= 0.0) || n >= 1.0)
                throw config_error("config: noise levels must lie in [0, 1)");
            if (n > 0.0) noisy = true;
        }
        if (noisy && !seed_set)
            throw config_error("config: a seed is required when noise levels are positive");
    }
};

namespace detail {

inline PhantomSpec phantom_from_value(const ConfigValue& v) {
    if (!v.is_map() || v.entries.size() != 1)
        throw config_error("config: a source must be a one-entry map such as {shepp_logan}");
    const auto& [kind, body] = v.entries.front();
    if (kind == "gaussian") {
        const ConfigValue& c = body.at("center");
        if (!c.is_list() || c.list.size() != 2)
            throw config_error("config: gaussian center must be [x1, x2]");
        double sharp;
        if (const ConfigValue* s = body.find("sharpness")) {
            sharp = s->as_double();
        } else if (const ConfigValue* w = body.find("width")) {
            const double width = w->as_double();
            if (!(width > 0.0)) throw config_error("config: gaussian width must be > 0");
            sharp = 1.0 / (width * width);
        } else {
            throw config_error("config: gaussian needs 'sharpness' or 'width'");
        }
        return PhantomSpec::gaussian(c.list[0].as_double(), c.list[1].as_double(), sharp);
    }
    if (kind == "shepp_logan") return PhantomSpec::shepp_logan();
    if (kind == "smoothed_shepp_logan") {
        double std_px = 3.0;
        if (body.is_map())
            if (const ConfigValue* s = body.find("std")) std_px = s->as_double();
        return PhantomSpec::smoothed_shepp_logan(std_px);
    }
    if (kind == "affine") {
        if (!body.is_list() || body.list.size() != 3)
            throw config_error("config: affine source must be {affine: [c0, c1, c2]}");
        return PhantomSpec::affine(body.list[0].as_double(), body.list[1].as_double(),
                                   body.list[2].as_double());
    }
    if (kind == "constant") return PhantomSpec::constant(body.as_double());
    throw config_error("config: unknown source kind '" + kind + "'");
}

} // namespace detail

/// Builds an ExperimentConfig from parsed key/value pairs, starting from the
/// given defaults. Unknown keys are rejected.
inline ExperimentConfig config_from_values(const std::map<std::string, ConfigValue>& values,
                                           ExperimentConfig cfg = {}) {
    for (const auto& [key, v] : values) {
        if (key == "domain") {
            if (!v.is_list() || v.list.size() != 4)
                throw config_error("config: domain must be [x1_min, x1_max, x2_min, x2_max]");
            cfg.x1_min = v.list[0].as_double();
            cfg.x1_max = v.list[1].as_double();
            cfg.x2_min = v.list[2].as_double();
            cfg.x2_max = v.list[3].as_double();
        } else if (key == "grid") {
            if (!v.is_list() || v.list.size() != 2) throw config_error("config: grid must be [nx, ny]");
            cfg.forward_nx = static_cast<int>(v.list[0].as_int());
            cfg.forward_ny = static_cast<int>(v.list[1].as_int());
        } else if (key == "recon_grid") {
            if (!v.is_list() || v.list.size() != 2)
                throw config_error("config: recon_grid must be [nx, ny]");
            cfg.recon_nx = static_cast<int>(v.list[0].as_int());
            cfg.recon_ny = static_cast<int>(v.list[1].as_int());
        } else if (key == "directions") {
            cfg.directions = static_cast<int>(v.as_int());
        } else if (key == "sigma") {
            if (v.is_map() && v.find("affine")) {
                const ConfigValue& a = v.at("affine");
                if (!a.is_list() || a.list.size() != 3)
                    throw config_error("config: sigma must be {affine: [c0, c1, c2]}");
                cfg.sigma.affine = true;
                cfg.sigma.c0 = a.list[0].as_double();
                cfg.sigma.c1 = a.list[1].as_double();
                cfg.sigma.c2 = a.list[2].as_double();
            } else if (v.is_map() && v.find("csv")) {
                cfg.sigma.affine = false;
                cfg.sigma.csv_path = v.at("csv").as_string();
            } else {
                throw config_error("config: sigma must be {affine: [...]} or {csv: path}");
            }
        } else if (key == "kernel") {
            if (v.is_map() && v.find("hg")) {
                cfg.kernel.henyey_greenstein = true;
                cfg.kernel.g = v.at("hg").as_double();
            } else if (v.is_map() && v.find("none")) {
                cfg.kernel.henyey_greenstein = false;
            } else {
                throw config_error("config: kernel must be {hg: g} or {none}");
            }
        } else if (key == "source") {
            cfg.sources = {detail::phantom_from_value(v)};
        } else if (key == "sources") {
            if (!v.is_list()) throw config_error("config: sources must be a list");
            cfg.sources.clear();
            for (const ConfigValue& s : v.list) cfg.sources.push_back(detail::phantom_from_value(s));
        } else if (key == "v0_boundary") {
            cfg.v0_boundary = v.as_double();
        } else if (key == "method") {
            const std::string& m = v.as_string();
            if (m == "neumann")
                cfg.method = InversionMethod::neumann;
            else if (m == "fredholm")
                cfg.method = InversionMethod::fredholm;
            else
                throw config_error("config: method must be neumann or fredholm");
        } else if (key == "noise") {
            if (!v.is_list()) throw config_error("config: noise must be a list of levels");
            cfg.noise_levels.clear();
            for (const ConfigValue& n : v.list) cfg.noise_levels.push_back(n.as_double());
        } else if (key == "seed") {
            cfg.seed = static_cast<uint64_t>(v.as_int());
            cfg.seed_set = true;
        } else if (key == "out") {
            cfg.out_dir = v.as_string();
        } else if (key == "cache") {
            cfg.cache_dir = v.as_string();
        } else if (key == "pgm") {
            cfg.write_pgm = v.as_bool();
        } else if (key == "solver.tolerance") {
            cfg.solver.tolerance = v.as_double();
        } else if (key == "solver.max_iterations") {
            cfg.solver.max_iterations = static_cast<int>(v.as_int());
        } else if (key == "solver.damping") {
            cfg.solver.damping = v.as_double();
        } else if (key == "neumann.tolerance") {
            cfg.neumann.tolerance = v.as_double();
        } else if (key == "neumann.max_iterations") {
            cfg.neumann.max_iterations = static_cast<int>(v.as_int());
        } else if (key == "neumann.alternating_sign") {
            cfg.neumann.alternating_sign = v.as_bool();
        } else if (key == "fredholm.svd_threshold") {
            cfg.fredholm_svd_threshold = v.as_double();
        } else if (key == "fredholm.polynomials") {
            cfg.fredholm_polynomials = v.as_bool();
        } else if (key == "fredholm.pyramids") {
            cfg.fredholm_pyramids = v.as_bool();
        } else {
            throw config_error("config: unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig defaults = {}) {
    return config_from_values(parse_config_file(path), std::move(defaults));
}

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_phantom(const PhantomSpec& s) {
    switch (s.kind) {
        case PhantomSpec::Kind::gaussian:
            return "{gaussian: {center: [" + format_double(s.center1) + ", " +
                   format_double(s.center2) + "], sharpness: " + format_double(s.sharpness) + "}}";
        case PhantomSpec::Kind::shepp_logan: return "{shepp_logan}";
        case PhantomSpec::Kind::smoothed_shepp_logan:
            return "{smoothed_shepp_logan: {std: " + format_double(s.smooth_std) + "}}";
        case PhantomSpec::Kind::affine:
            return "{affine: [" + format_double(s.c0) + ", " + format_double(s.c1) + ", " +
                   format_double(s.c2) + "]}";
        case PhantomSpec::Kind::constant: return "{constant: " + format_double(s.value) + "}";
    }
    return "{}";
}

} // namespace detail

/// Renders a config in the same format load_config reads.
inline std::string format_config(const ExperimentConfig& cfg) {
    using detail::format_double;
    std::ostringstream out;
    out << "domain = [" << format_double(cfg.x1_min) << ", " << format_double(cfg.x1_max) << ", "
        << format_double(cfg.x2_min) << ", " << format_double(cfg.x2_max) << "]\n";
    out << "grid = [" << cfg.forward_nx << ", " << cfg.forward_ny << "]\n";
    out << "recon_grid = [" << cfg.recon_nx << ", " << cfg.recon_ny << "]\n";
    out << "directions = " << cfg.directions << "\n";
    if (cfg.sigma.affine)
        out << "sigma = {affine: [" << format_double(cfg.sigma.c0) << ", "
            << format_double(cfg.sigma.c1) << ", " << format_double(cfg.sigma.c2) << "]}\n";
    else
        out << "sigma = {csv: \"" << cfg.sigma.csv_path << "\"}\n";
    if (cfg.kernel.henyey_greenstein)
        out << "kernel = {hg: " << format_double(cfg.kernel.g) << "}\n";
    else
        out << "kernel = {none}\n";
    out << "sources = [";
    for (size_t i = 0; i < cfg.sources.size(); ++i) {
        if (i) out << ", ";
        out << detail::format_phantom(cfg.sources[i]);
    }
    out << "]\n";
    out << "v0_boundary = " << format_double(cfg.v0_boundary) << "\n";
    out << "method = " << (cfg.method == InversionMethod::neumann ? "neumann" : "fredholm") << "\n";
    out << "noise = [";
    for (size_t i = 0; i < cfg.noise_levels.size(); ++i) {
        if (i) out << ", ";
        out << format_double(cfg.noise_levels[i]);
    }
    out << "]\n";
    out << "seed = " << cfg.seed << "\n";
    out << "out = \"" << cfg.out_dir << "\"\n";
    out << "cache = \"" << cfg.cache_dir << "\"\n";
    out << "pgm = " << (cfg.write_pgm ? "true" : "false") << "\n";
    out << "\n[solver]\n";
    out << "tolerance = " << format_double(cfg.solver.tolerance) << "\n";
    out << "max_iterations = " << cfg.solver.max_iterations << "\n";
    out << "damping = " << format_double(cfg.solver.damping) << "\n";
    out << "\n[neumann]\n";
    out << "tolerance = " << format_double(cfg.neumann.tolerance) << "\n";
    out << "max_iterations = " << cfg.neumann.max_iterations << "\n";
    out << "alternating_sign = " << (cfg.neumann.alternating_sign ? "true" : "false") << "\n";
    out << "\n[fredholm]\n";
    out << "svd_threshold = " << format_double(cfg.fredholm_svd_threshold) << "\n";
    out << "polynomials = " << (cfg.fredholm_polynomials ? "true" : "false") << "\n";
    out << "pyramids = " << (cfg.fredholm_pyramids ? "true" : "false") << "\n";
    return out.str();
}

/// The four built-in experiment presets.
inline ExperimentConfig experiment_preset(int number) {
    ExperimentConfig cfg;
    switch (number) {
        case 1:
            cfg.x1_min = 0.0;
            cfg.x1_max = 0.2;
            cfg.x2_min = 0.0;
            cfg.x2_max = 0.2;
            cfg.sigma = SigmaSpec{true, 0.1, 0.1, 0.0, ""};
            cfg.sources = {PhantomSpec::gaussian(0.08, 0.12, 100.0), PhantomSpec::shepp_logan()};
            cfg.method = InversionMethod::neumann;
            cfg.out_dir = "out/experiment1";
            break;
        case 2:
            cfg.sigma = SigmaSpec{true, 1.1, 0.2, 0.0, ""};
            cfg.sources = {PhantomSpec::gaussian(0.4, 0.6, 10.0), PhantomSpec::shepp_logan()};
            cfg.method = InversionMethod::neumann;
            cfg.out_dir = "out/experiment2";
            break;
        case 3:
            cfg.sigma = SigmaSpec{true, 0.1, 0.1, 0.0, ""};
            cfg.sources = {PhantomSpec::gaussian(0.4, 0.6, 10.0)};
            cfg.method = InversionMethod::fredholm;
            cfg.out_dir = "out/experiment3";
            break;
        case 4:
            cfg.sigma = SigmaSpec{true, 0.1, 0.1, 0.0, ""};
            cfg.sources = {PhantomSpec::shepp_logan(), PhantomSpec::smoothed_shepp_logan(3.0)};
            cfg.method = InversionMethod::fredholm;
            cfg.out_dir = "out/experiment4";
            break;
        default: throw config_error("experiment_preset: preset must be 1, 2, 3 or 4");
    }
    return cfg;
}

} // namespace umblt
