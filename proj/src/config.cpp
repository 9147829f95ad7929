#include "qptorus/config.hpp"

#include "qptorus/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace qpt::config {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::ConfigError, what); }

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) bad(where + " must be an object");
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) bad("unknown key '" + k + "' in " + where);
    }
}

double number(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_number()) bad(where + "." + key + " must be a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_number_integer()) bad(where + "." + key + " must be an integer");
    return j.get<int>();
}

template <class T>
T get_or(const json& obj, const std::string& key, const std::string& where, T fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) bad(where + "." + key + " must be a boolean");
        return v.get<bool>();
    } else if constexpr (std::is_same_v<T, int>) {
        return integer(v, key, where);
    } else if constexpr (std::is_same_v<T, double>) {
        return number(v, key, where);
    } else {
        if (!v.is_string()) bad(where + "." + key + " must be a string");
        return v.get<std::string>();
    }
}

std::vector<int> int_list(const json& j, const std::string& where) {
    if (!j.is_array()) bad(where + " must be an array of integers");
    std::vector<int> out;
    for (const auto& v : j) out.push_back(integer(v, "", where));
    return out;
}

basis::BasisSpec parse_basis(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("type")) bad(where + " needs a type");
    const std::string type = get_or<std::string>(j, "type", where, "");
    basis::BasisSpec s;
    if (type == "HB") {
        check_keys(j, where, {"type", "harmonics", "S"});
        if (!j.contains("harmonics") || !j.contains("S")) bad(where + ": HB needs harmonics and S");
        const int S = integer(j.at("S"), "S", where);
        if (j.at("harmonics").is_array()) {
            s = basis::BasisSpec::harmonic(int_list(j.at("harmonics"), where + ".harmonics"), S);
        } else {
            s = basis::BasisSpec::harmonic_upto(integer(j.at("harmonics"), "harmonics", where), S);
        }
    } else if (type == "CO") {
        check_keys(j, where, {"type", "P", "m"});
        if (!j.contains("P") || !j.contains("m")) bad(where + ": CO needs P and m");
        s = basis::BasisSpec::collocation(integer(j.at("P"), "P", where), integer(j.at("m"), "m", where));
    } else if (type == "FD") {
        check_keys(j, where, {"type", "stencil", "U"});
        if (!j.contains("stencil") || !j.contains("U")) bad(where + ": FD needs stencil and U");
        s = basis::BasisSpec::finite_difference(int_list(j.at("stencil"), where + ".stencil"), integer(j.at("U"), "U", where));
    } else {
        bad(where + ": unknown basis type '" + type + "'");
    }
    try {
        s.validate();
    } catch (const Error& e) {
        bad(where + ": " + e.what());
    }
    return s;
}

json basis_json(const basis::BasisSpec& s) {
    switch (s.kind) {
        case basis::BasisKind::HB: return {{"type", "HB"}, {"harmonics", s.orders}, {"S", s.S}};
        case basis::BasisKind::CO: return {{"type", "CO"}, {"P", s.intervals}, {"m", s.degree}};
        case basis::BasisKind::FD: return {{"type", "FD"}, {"stencil", s.stencil}, {"U", s.U}};
    }
    return {};
}

const std::map<std::string, std::set<std::string>>& model_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"duffing_vdp", {"mu", "alpha", "omega0", "forcing"}},
        {"beam", {"elements", "excitation", "length", "width", "height", "density", "youngs", "k_linear", "k_cubic",
                  "alpha", "beta"}},
        {"pipe", {"modes", "flow_velocity", "excitation", "kelvin_voigt", "mass_ratio", "gravity", "quadrature_points"}},
    };
    return keys;
}

ModelConfig parse_model(const json& j) {
    check_keys(j, "model", {"name", "params"});
    ModelConfig m;
    m.name = get_or<std::string>(j, "name", "model", "");
    const auto it = model_keys().find(m.name);
    if (it == model_keys().end()) bad("model.name must be one of duffing_vdp, beam, pipe");
    const json params = j.value("params", json::object());
    check_keys(params, "model.params", it->second);
    for (const auto& [k, v] : params.items()) {
        if (k == "forcing") {
            if (!v.is_array() || v.empty()) bad("model.params.forcing must be a non-empty array");
            for (const auto& f : v) m.forcing.push_back(number(f, "forcing", "model.params"));
        } else {
            m.scalars[k] = number(v, k, "model.params");
        }
    }
    if (m.name == "duffing_vdp" && m.forcing.empty()) bad("duffing_vdp needs model.params.forcing");
    if (m.name == "pipe" && !m.scalars.count("flow_velocity")) bad("pipe needs model.params.flow_velocity");
    return m;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

models::SecondOrderSystem build_model(const ModelConfig& m, const std::string& override_name, double override_value) {
    auto scalars = m.scalars;
    if (!override_name.empty()) {
        const auto it = model_keys().find(m.name);
        if (it == model_keys().end() || !it->second.count(override_name) || override_name == "forcing") {
            bad("model parameter '" + override_name + "' cannot be continued");
        }
        scalars[override_name] = override_value;
    }
    auto val = [&](const char* k, double def) {
        const auto it = scalars.find(k);
        return it == scalars.end() ? def : it->second;
    };
    auto count = [&](const char* k, int def) {
        const double v = val(k, def);
        if (v != std::floor(v) || v < 1) bad(std::string("model.params.") + k + " must be a positive integer");
        return static_cast<int>(v);
    };
    if (m.name == "duffing_vdp") return models::duffing_vdp(val("mu", 0.2), val("alpha", 0.5), val("omega0", 2.0), m.forcing);
    if (m.name == "beam") {
        models::BeamParameters p;
        p.elements = count("elements", p.elements);
        p.excitation = val("excitation", p.excitation);
        p.length = val("length", p.length);
        p.width = val("width", p.width);
        p.height = val("height", p.height);
        p.density = val("density", p.density);
        p.youngs = val("youngs", p.youngs);
        p.k_linear = val("k_linear", p.k_linear);
        p.k_cubic = val("k_cubic", p.k_cubic);
        p.alpha = val("alpha", p.alpha);
        p.beta = val("beta", p.beta);
        return models::beam_system(p);
    }
    if (m.name == "pipe") {
        models::PipeParameters p;
        p.modes = count("modes", p.modes);
        p.flow_velocity = val("flow_velocity", p.flow_velocity);
        p.excitation = val("excitation", p.excitation);
        p.kelvin_voigt = val("kelvin_voigt", p.kelvin_voigt);
        p.mass_ratio = val("mass_ratio", p.mass_ratio);
        p.gravity = val("gravity", p.gravity);
        p.quadrature_points = count("quadrature_points", p.quadrature_points);
        return models::pipe_system(p);
    }
    bad("unknown model '" + m.name + "'");
}

std::filesystem::path RunConfig::output_path(const std::string& suffix) const {
    return output_dir / (prefix + suffix);
}

RunConfig parse(const std::string& json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        bad(std::string("invalid JSON: ") + e.what());
    }
    check_keys(j, "config", {"schema", "model", "bases", "frequencies", "parameter", "continuation", "seed", "stability",
                             "ns_init", "oracle", "output"});
    if (j.value("schema", std::string{}) != kSchema) bad(std::string("schema must be \"") + kSchema + "\"");

    RunConfig c;
    c.base_dir = base_dir;
    if (!j.contains("model")) bad("missing model");
    c.model = parse_model(j.at("model"));

    if (!j.contains("bases") || !j.at("bases").is_array() || j.at("bases").empty()) bad("bases must be a non-empty array");
    for (std::size_t i = 0; i < j.at("bases").size(); ++i) {
        c.bases.push_back(parse_basis(j.at("bases")[i], "bases[" + std::to_string(i) + "]"));
    }
    const int d = c.d();
    if (d > 4) bad("at most 4 dimensions are supported");

    c.parameter = get_or<std::string>(j, "parameter", "config", "omega1");
    if (c.parameter != "omega1" && c.parameter.rfind("model.", 0) != 0) bad("parameter must be omega1 or model.<name>");

    if (!j.contains("frequencies") || !j.at("frequencies").is_array() || static_cast<int>(j.at("frequencies").size()) != d) {
        bad("frequencies must list one entry per basis");
    }
    for (std::size_t i = 0; i < j.at("frequencies").size(); ++i) {
        const json& f = j.at("frequencies")[i];
        const std::string where = "frequencies[" + std::to_string(i) + "]";
        check_keys(f, where, {"role", "initial", "ratio", "reference", "value"});
        continuation::FrequencySetup s;
        try {
            s.role = continuation::frequency_role_from_string(get_or<std::string>(f, "role", where, ""));
        } catch (const Error&) {
            bad(where + ".role must be parameter, ratio, unknown or fixed");
        }
        s.initial = get_or<double>(f, "initial", where, 1.0);
        s.ratio = get_or<double>(f, "ratio", where, 1.0);
        s.reference = get_or<int>(f, "reference", where, 1) - 1;
        s.value = get_or<double>(f, "value", where, s.initial);
        if (s.role == continuation::FrequencyRole::Fixed) s.initial = s.value;
        if (s.role == continuation::FrequencyRole::Ratio) {
            if (s.reference < 0 || s.reference >= d || s.reference == static_cast<int>(i)) bad(where + ".reference must name another frequency (1-based)");
            if (!(s.ratio > 0)) bad(where + ".ratio must be positive");
        }
        if (!(s.initial > 0)) bad(where + ".initial must be positive");
        c.frequencies.push_back(s);
    }
    int params = 0;
    for (const auto& f : c.frequencies) params += f.role == continuation::FrequencyRole::Parameter;
    if (c.parameter_is_frequency()) {
        if (c.frequencies[0].role != continuation::FrequencyRole::Parameter || params != 1) {
            bad("with parameter omega1 exactly frequencies[0] has role parameter");
        }
    } else {
        if (params != 0) bad("with a model parameter no frequency may have role parameter");
        if (!c.model.scalars.count(c.model_parameter())) bad("continued model parameter must be given in model.params");
        (void)build_model(c.model, c.model_parameter(), c.model.scalars.at(c.model_parameter()));
    }

    const json cont = j.value("continuation", json::object());
    check_keys(cont, "continuation", {"p_min", "p_max", "direction", "step", "max_points", "max_iterations", "tolerance", "normalization"});
    auto& o = c.continuation;
    if (!cont.contains("p_min") || !cont.contains("p_max")) bad("continuation needs p_min and p_max");
    o.p_min = get_or<double>(cont, "p_min", "continuation", 0.0);
    o.p_max = get_or<double>(cont, "p_max", "continuation", 0.0);
    o.direction = get_or<int>(cont, "direction", "continuation", 1);
    if (o.direction != 1 && o.direction != -1) bad("continuation.direction must be 1 or -1");
    o.max_points = get_or<int>(cont, "max_points", "continuation", o.max_points);
    o.max_iterations = get_or<int>(cont, "max_iterations", "continuation", o.max_iterations);
    o.tolerance = get_or<double>(cont, "tolerance", "continuation", o.tolerance);
    const std::string norm = get_or<std::string>(cont, "normalization", "continuation", "arclength");
    if (norm == "arclength") {
        o.normalization = continuation::Normalization::Arclength;
    } else if (norm == "parameter") {
        o.normalization = continuation::Normalization::Parameter;
    } else if (norm == "scaled") {
        o.normalization = continuation::Normalization::Scaled;
    } else {
        bad("continuation.normalization must be arclength, parameter or scaled");
    }
    if (cont.contains("step")) {
        const json& st = cont.at("step");
        check_keys(st, "continuation.step", {"initial", "min", "max"});
        o.step.initial = get_or<double>(st, "initial", "continuation.step", o.step.initial);
        o.step.min = get_or<double>(st, "min", "continuation.step", o.step.min);
        o.step.max = get_or<double>(st, "max", "continuation.step", o.step.max);
    }
    if (o.max_points < 1 || o.max_iterations < 1 || !(o.tolerance > 0)) bad("continuation counts and tolerance must be positive");
    if (!(o.step.min > 0) || o.step.min > o.step.max || o.step.initial <= 0) bad("continuation.step must satisfy 0 < min <= max and initial > 0");

    const json seed = j.value("seed", json::object());
    check_keys(seed, "seed", {"source", "path", "max_iterations"});
    c.seed.source = get_or<std::string>(seed, "source", "seed", "linear-solve");
    c.seed.max_iterations = get_or<int>(seed, "max_iterations", "seed", c.seed.max_iterations);
    if (c.seed.source == "file") {
        if (!seed.contains("path")) bad("seed.path is required for a file seed");
        c.seed.path = resolve(base_dir, get_or<std::string>(seed, "path", "seed", ""));
        if (!std::filesystem::exists(c.seed.path)) bad("seed file not found: " + c.seed.path.string());
    } else if (c.seed.source != "linear-solve") {
        bad("seed.source must be linear-solve or file");
    }

    const json stab = j.value("stability", json::object());
    check_keys(stab, "stability", {"floquet", "N_M", "tolerance", "lyapunov"});
    c.stability.floquet = get_or<bool>(stab, "floquet", "stability", true);
    c.stability.steps = get_or<int>(stab, "N_M", "stability", c.stability.steps);
    c.stability.tolerance = get_or<double>(stab, "tolerance", "stability", c.stability.tolerance);
    if (c.stability.steps < 1 || !(c.stability.tolerance >= 0)) bad("stability.N_M must be positive and tolerance non-negative");
    if (stab.contains("lyapunov")) {
        const json& ly = stab.at("lyapunov");
        check_keys(ly, "stability.lyapunov", {"enabled", "j", "Y", "N_L", "N_M", "count", "histories"});
        auto& lo = c.stability.lyap;
        c.stability.lyapunov = get_or<bool>(ly, "enabled", "stability.lyapunov", true);
        lo.j = get_or<int>(ly, "j", "stability.lyapunov", 1) - 1;
        if (lo.j < 0 || lo.j >= d) bad("stability.lyapunov.j must be a 1-based dimension");
        if (ly.contains("Y")) {
            lo.samples = int_list(ly.at("Y"), "stability.lyapunov.Y");
            if (static_cast<int>(lo.samples.size()) != d - 1) bad("stability.lyapunov.Y needs d - 1 entries");
        }
        lo.iterations = get_or<int>(ly, "N_L", "stability.lyapunov", lo.iterations);
        lo.steps = get_or<int>(ly, "N_M", "stability.lyapunov", 2048);
        lo.count = get_or<int>(ly, "count", "stability.lyapunov", lo.count);
        c.stability.histories = get_or<bool>(ly, "histories", "stability.lyapunov", false);
        if (lo.iterations < 5 || lo.steps < 1 || lo.count < 1) bad("stability.lyapunov counts out of range");
    } else {
        c.stability.lyap.steps = 2048;
    }

    const json ns = j.value("ns_init", json::object());
    check_keys(ns, "ns_init", {"basis", "N_M", "unit_tolerance"});
    if (ns.contains("basis")) c.ns_init.basis = parse_basis(ns.at("basis"), "ns_init.basis");
    c.ns_init.steps = get_or<int>(ns, "N_M", "ns_init", c.ns_init.steps);
    c.ns_init.unit_tol = get_or<double>(ns, "unit_tolerance", "ns_init", c.ns_init.unit_tol);

    const json orc = j.value("oracle", json::object());
    check_keys(orc, "oracle", {"dt_per_period", "transient_periods", "window_periods"});
    c.oracle.dt_per_period = get_or<int>(orc, "dt_per_period", "oracle", c.oracle.dt_per_period);
    c.oracle.transient_periods = get_or<double>(orc, "transient_periods", "oracle", c.oracle.transient_periods);
    c.oracle.window_periods = get_or<double>(orc, "window_periods", "oracle", c.oracle.window_periods);
    if (c.oracle.dt_per_period < 4 || c.oracle.transient_periods < 0 || !(c.oracle.window_periods > 0)) bad("oracle settings out of range");

    const json out = j.value("output", json::object());
    check_keys(out, "output", {"directory", "prefix"});
    c.output_dir = resolve(base_dir, get_or<std::string>(out, "directory", "output", "."));
    c.prefix = get_or<std::string>(out, "prefix", "output", "run");
    if (c.prefix.empty() || c.prefix.find('/') != std::string::npos) bad("output.prefix must be a plain file name");
    return c;
}

RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) bad("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

basis::BasisSpec basis_from_json(const std::string& json_text) {
    try {
        return parse_basis(json::parse(json_text), "basis");
    } catch (const json::parse_error& e) {
        bad(std::string("invalid JSON: ") + e.what());
    }
}

std::string basis_to_json(const basis::BasisSpec& spec) { return basis_json(spec).dump(); }

}  // namespace qpt::config
