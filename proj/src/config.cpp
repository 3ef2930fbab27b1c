#include "timeorder/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace timeorder {

namespace {

struct Cursor {
    std::string_view s;
    std::size_t i = 0;
    int line = 0;

    bool done() const { return i >= s.size(); }
    char peek() const { return done() ? '\0' : s[i]; }
    void skip_ws() {
        while (!done() && (s[i] == ' ' || s[i] == '\t')) ++i;
    }
    [[noreturn]] void fail(const std::string& m) const {
        throw ParseError("line " + std::to_string(line) + ": " + m);
    }
};

bool bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string read_key(Cursor& c) {
    std::size_t start = c.i;
    while (!c.done() && bare_key_char(c.peek())) ++c.i;
    if (c.i == start) c.fail("expected a key");
    return std::string(c.s.substr(start, c.i - start));
}

TomlValue read_value(Cursor& c);

TomlValue read_string(Cursor& c) {
    TomlValue v;
    v.kind = TomlValue::Kind::String;
    v.line = c.line;
    ++c.i;  // opening quote
    while (true) {
        if (c.done()) c.fail("unterminated string");
        char ch = c.s[c.i++];
        if (ch == '"') break;
        if (ch == '\\') {
            if (c.done()) c.fail("unterminated escape");
            char e = c.s[c.i++];
            switch (e) {
            case 'n': v.string += '\n'; break;
            case 't': v.string += '\t'; break;
            case '"': v.string += '"'; break;
            case '\\': v.string += '\\'; break;
            default: c.fail(std::string("unsupported escape \\") + e);
            }
        } else {
            v.string += ch;
        }
    }
    return v;
}

TomlValue read_number(Cursor& c) {
    std::size_t start = c.i;
    while (!c.done() && (std::isalnum(static_cast<unsigned char>(c.peek())) || c.peek() == '+' ||
                         c.peek() == '-' || c.peek() == '.' || c.peek() == '_'))
        ++c.i;
    std::string tok;
    for (char ch : c.s.substr(start, c.i - start))
        if (ch != '_') tok += ch;
    if (!tok.empty() && tok[0] == '+') tok.erase(0, 1);
    TomlValue v;
    v.kind = TomlValue::Kind::Number;
    v.line = c.line;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    auto r = std::from_chars(b, e, v.number);
    if (tok.empty() || r.ec != std::errc() || r.ptr != e || !std::isfinite(v.number))
        c.fail("invalid number '" + std::string(c.s.substr(start, c.i - start)) + "'");
    return v;
}

TomlValue read_array(Cursor& c) {
    TomlValue v;
    v.kind = TomlValue::Kind::Array;
    v.line = c.line;
    ++c.i;  // [
    c.skip_ws();
    if (c.peek() == ']') {
        ++c.i;
        return v;
    }
    while (true) {
        c.skip_ws();
        v.array.push_back(read_value(c));
        c.skip_ws();
        if (c.peek() == ',') {
            ++c.i;
            c.skip_ws();
            if (c.peek() == ']') {
                ++c.i;
                return v;
            }
            continue;
        }
        if (c.peek() == ']') {
            ++c.i;
            return v;
        }
        c.fail("expected ',' or ']' in array");
    }
}

TomlValue read_value(Cursor& c) {
    c.skip_ws();
    const char ch = c.peek();
    if (ch == '"') return read_string(c);
    if (ch == '[') return read_array(c);
    if (c.s.substr(c.i, 4) == "true" && (c.i + 4 >= c.s.size() || !bare_key_char(c.s[c.i + 4]))) {
        c.i += 4;
        TomlValue v;
        v.kind = TomlValue::Kind::Bool;
        v.boolean = true;
        v.line = c.line;
        return v;
    }
    if (c.s.substr(c.i, 5) == "false" && (c.i + 5 >= c.s.size() || !bare_key_char(c.s[c.i + 5]))) {
        c.i += 5;
        TomlValue v;
        v.kind = TomlValue::Kind::Bool;
        v.line = c.line;
        return v;
    }
    if (ch == '+' || ch == '-' || ch == '.' || std::isdigit(static_cast<unsigned char>(ch))) return read_number(c);
    c.fail("expected a value");
}

void expect_line_end(Cursor& c) {
    c.skip_ws();
    if (c.done() || c.peek() == '#') return;
    c.fail("unexpected trailing characters");
}

// ---- schema helpers ----

struct Schema {
    const TomlDocument& doc;
    std::vector<std::string> errors;

    const TomlValue* get(const std::string& sec, const std::string& key) const {
        auto s = doc.find(sec);
        if (s == doc.end()) return nullptr;
        auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }
    bool has_section(const std::string& sec) const { return doc.count(sec) != 0; }
    static std::string path(const std::string& sec, const std::string& key) {
        return sec.empty() ? key : sec + "." + key;
    }

    std::optional<double> number(const std::string& sec, const std::string& key, bool required) {
        const auto* v = get(sec, key);
        if (!v) {
            if (required) errors.push_back(path(sec, key) + " is required");
            return std::nullopt;
        }
        if (v->kind != TomlValue::Kind::Number) {
            errors.push_back(path(sec, key) + " must be a number");
            return std::nullopt;
        }
        return v->number;
    }
    std::optional<std::string> string(const std::string& sec, const std::string& key, bool required) {
        const auto* v = get(sec, key);
        if (!v) {
            if (required) errors.push_back(path(sec, key) + " is required");
            return std::nullopt;
        }
        if (v->kind != TomlValue::Kind::String) {
            errors.push_back(path(sec, key) + " must be a string");
            return std::nullopt;
        }
        return v->string;
    }
    std::optional<bool> boolean(const std::string& sec, const std::string& key) {
        const auto* v = get(sec, key);
        if (!v) return std::nullopt;
        if (v->kind != TomlValue::Kind::Bool) {
            errors.push_back(path(sec, key) + " must be true or false");
            return std::nullopt;
        }
        return v->boolean;
    }
    std::optional<std::vector<TomlValue>> array(const std::string& sec, const std::string& key) {
        const auto* v = get(sec, key);
        if (!v) return std::nullopt;
        if (v->kind != TomlValue::Kind::Array) {
            errors.push_back(path(sec, key) + " must be an array");
            return std::nullopt;
        }
        return v->array;
    }
    std::optional<std::size_t> count(const std::string& sec, const std::string& key, bool required) {
        auto v = number(sec, key, required);
        if (!v) return std::nullopt;
        if (*v < 0 || std::floor(*v) != *v) {
            errors.push_back(path(sec, key) + " must be a non-negative integer");
            return std::nullopt;
        }
        return static_cast<std::size_t>(*v);
    }
    void positive(const std::optional<double>& v, const std::string& p) {
        if (v && !(*v > 0.0)) errors.push_back(p + " must be positive");
    }
};

const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>> m = {
        {"process", {"kind", "length", "epsilon", "phase_matching"}},
        {"pump", {"nu", "tau", "sigma", "amplitude_scale"}},
        {"mode.a", {"nu", "k_ref", "group_velocity", "gvd"}},
        {"mode.b", {"nu", "k_ref", "group_velocity", "gvd"}},
        {"mode.p", {"nu", "k_ref", "group_velocity", "gvd"}},
        {"grid.a", {"center", "half_width", "points"}},
        {"grid.b", {"center", "half_width", "points"}},
        {"quadrature", {"rel_tol", "window", "pv_window", "max_eval", "abs_floor", "spectator"}},
        {"output", {"directory", "formats", "render", "channels"}},
        {"oracle", {"time_span", "steps", "pump_window", "epsilons"}},
        {"lab", {"pulse_energy", "area", "chi2", "chi3", "n_a", "n_b", "n_c"}},
    };
    return m;
}

ModeDispersion read_mode(Schema& s, const std::string& sec, std::optional<double> default_nu) {
    ModeDispersion m;
    auto nu = s.number(sec, "nu", !default_nu.has_value());
    m.nu = nu ? *nu : default_nu.value_or(0.0);
    m.k_ref = s.number(sec, "k_ref", true).value_or(0.0);
    auto vg = s.number(sec, "group_velocity", true);
    s.positive(vg, sec + ".group_velocity");
    m.group_velocity = vg.value_or(1.0);
    m.gvd = s.number(sec, "gvd", false);
    s.positive(nu, sec + ".nu");
    return m;
}

FrequencyGrid read_grid(Schema& s, const std::string& sec, char label, double default_center) {
    FrequencyGrid g;
    g.label = label;
    auto c = s.number(sec, "center", false);
    g.center = c.value_or(default_center);
    auto hw = s.number(sec, "half_width", true);
    s.positive(hw, sec + ".half_width");
    g.half_width = hw.value_or(1.0);
    auto n = s.count(sec, "points", true);
    if (n && *n < 2) s.errors.push_back(sec + ".points must be at least 2");
    g.points = n.value_or(2);
    return g;
}

} // namespace

TomlDocument parse_toml(std::string_view text) {
    TomlDocument doc;
    std::string section;
    doc[section];
    std::set<std::string> headers;
    std::size_t pos = 0;
    int line = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view raw = text.substr(pos, end - pos);
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        ++line;
        Cursor c{raw, 0, line};
        c.skip_ws();
        if (!c.done() && c.peek() != '#') {
            if (c.peek() == '[') {
                ++c.i;
                c.skip_ws();
                std::string name = read_key(c);
                while (c.peek() == '.') {
                    ++c.i;
                    name += "." + read_key(c);
                }
                c.skip_ws();
                if (c.peek() != ']') c.fail("expected ']' after section name");
                ++c.i;
                expect_line_end(c);
                if (!headers.insert(name).second) c.fail("duplicate section [" + name + "]");
                section = name;
                doc[section];
            } else {
                std::string key = read_key(c);
                c.skip_ws();
                if (c.peek() != '=') c.fail("expected '=' after key '" + key + "'");
                ++c.i;
                TomlValue v = read_value(c);
                expect_line_end(c);
                auto& tab = doc[section];
                if (tab.count(key)) c.fail("duplicate key '" + key + "'");
                tab[key] = std::move(v);
            }
        }
        if (end == text.size()) break;
        pos = end + 1;
    }
    if (doc[""].empty()) doc.erase("");
    return doc;
}

RunConfig config_from_text(std::string_view text) {
    const TomlDocument doc = parse_toml(text);
    Schema s{doc, {}};

    for (const auto& [sec, keys] : doc) {
        auto a = allowed_keys().find(sec);
        if (a == allowed_keys().end()) {
            s.errors.push_back(sec.empty() ? "keys outside any section are not allowed" : "unknown section [" + sec + "]");
            continue;
        }
        for (const auto& [k, v] : keys)
            if (!a->second.count(k)) s.errors.push_back("unknown key " + sec + "." + k);
    }

    RunConfig cfg;
    cfg.source_text = std::string(text);
    ProcessSpec& spec = cfg.spec;

    if (auto kind = s.string("process", "kind", true)) {
        if (auto k = parse_process_kind(*kind)) spec.kind = *k;
        else s.errors.push_back("process.kind must be one of spdc-type2, spdc-type1, sfwm, fc");
    }
    auto length = s.number("process", "length", true);
    s.positive(length, "process.length");
    spec.length = length.value_or(1.0);
    if (auto pm = s.string("process", "phase_matching", false)) {
        if (*pm == "sinc") spec.shape = PhaseMatchingShape::Sinc;
        else if (*pm == "broad") spec.shape = PhaseMatchingShape::Broad;
        else s.errors.push_back("process.phase_matching must be \"sinc\" or \"broad\"");
    }

    const bool sfwm = spec.kind == ProcessKind::SFWM;
    auto nu = s.number("pump", "nu", true);
    s.positive(nu, "pump.nu");
    spec.pump.nu = nu.value_or(1.0);
    auto tau = s.number("pump", "tau", false);
    auto sigma = s.number("pump", "sigma", false);
    if (tau && sigma) s.errors.push_back("pump.tau and pump.sigma are mutually exclusive");
    if (!tau && !sigma) s.errors.push_back("pump.tau (or pump.sigma) is required");
    s.positive(tau, "pump.tau");
    s.positive(sigma, "pump.sigma");
    if (tau && *tau > 0.0) spec.pump.tau = *tau;
    else if (sigma && *sigma > 0.0)
        spec.pump.tau = sfwm ? tau_from_sigma_chi3(*sigma) : tau_from_sigma_chi2(*sigma);
    else spec.pump.tau = 1.0;
    if (auto amp = s.number("pump", "amplitude_scale", false)) {
        if (!(*amp >= 0.0)) s.errors.push_back("pump.amplitude_scale must be non-negative");
        spec.pump.amplitude_scale = *amp;
    }

    spec.dispersion.a = read_mode(s, "mode.a", std::nullopt);
    spec.dispersion.b = read_mode(s, "mode.b", std::nullopt);
    spec.dispersion.p = read_mode(s, "mode.p", spec.pump.nu);

    cfg.ga = read_grid(s, "grid.a", 'a', spec.dispersion.a.nu);
    cfg.gb = read_grid(s, "grid.b", 'b', spec.dispersion.b.nu);

    auto& q = cfg.quadrature;
    if (auto v = s.number("quadrature", "rel_tol", false)) {
        s.positive(v, "quadrature.rel_tol");
        q.rel_tol = *v;
    }
    if (auto v = s.number("quadrature", "window", false)) {
        s.positive(v, "quadrature.window");
        q.window = *v;
    }
    bool pv_set = false;
    if (auto v = s.number("quadrature", "pv_window", false)) {
        s.positive(v, "quadrature.pv_window");
        q.pv_window = *v;
        pv_set = true;
    }
    if (!pv_set) q.pv_window = 4.0 * q.window;
    if (auto v = s.count("quadrature", "max_eval", false)) {
        if (*v < 100) s.errors.push_back("quadrature.max_eval must be at least 100");
        q.max_eval = *v;
    }
    if (auto v = s.number("quadrature", "abs_floor", false)) {
        if (!(*v >= 0.0)) s.errors.push_back("quadrature.abs_floor must be non-negative");
        q.abs_floor = *v;
    }
    if (auto v = s.string("quadrature", "spectator", false)) {
        if (*v == "continuum") q.spectator = SpectatorMode::Continuum;
        else if (*v == "grid") q.spectator = SpectatorMode::Grid;
        else s.errors.push_back("quadrature.spectator must be \"continuum\" or \"grid\"");
    }

    if (auto v = s.string("output", "directory", false)) cfg.output.directory = *v;
    if (auto v = s.array("output", "formats")) {
        cfg.output.formats.clear();
        for (const auto& e : *v) {
            if (e.kind != TomlValue::Kind::String || e.string != "csv") s.errors.push_back("output.formats supports only \"csv\"");
            else cfg.output.formats.push_back(e.string);
        }
    }
    if (auto v = s.boolean("output", "render")) cfg.output.render = *v;
    if (auto v = s.array("output", "channels")) {
        cfg.output.channels.clear();
        for (const auto& e : *v) {
            const bool ok = e.kind == TomlValue::Kind::String &&
                            (e.string == "abs" || e.string == "phase" || e.string == "re" || e.string == "im");
            if (!ok) s.errors.push_back("output.channels entries must be abs, phase, re or im");
            else cfg.output.channels.push_back(e.string);
        }
    }

    if (s.has_section("oracle")) {
        OracleSection o;
        if (auto v = s.number("oracle", "time_span", false)) {
            if (!(*v >= 6.0)) s.errors.push_back("oracle.time_span must be at least 6");
            o.time_span = *v;
        }
        if (auto v = s.count("oracle", "steps", false)) {
            if (*v < 100) s.errors.push_back("oracle.steps must be at least 100");
            o.steps = *v;
        }
        if (auto v = s.number("oracle", "pump_window", false)) {
            s.positive(v, "oracle.pump_window");
            o.pump_window = *v;
        }
        if (auto v = s.array("oracle", "epsilons")) {
            for (const auto& e : *v) {
                if (e.kind != TomlValue::Kind::Number || !(e.number >= 0.0))
                    s.errors.push_back("oracle.epsilons entries must be non-negative numbers");
                else o.epsilons.push_back(e.number);
            }
        }
        cfg.oracle = o;
    }

    const auto eps = s.number("process", "epsilon", false);
    const bool has_lab = s.has_section("lab");
    if (eps && has_lab) s.errors.push_back("process.epsilon and [lab] are mutually exclusive");
    if (!eps && !has_lab) s.errors.push_back("process.epsilon or a [lab] section is required");
    if (eps) {
        if (!(*eps >= 0.0)) s.errors.push_back("process.epsilon must be non-negative");
        spec.epsilon = *eps;
    }
    if (has_lab && !eps) {
        LabParameters lab;
        lab.pulse_energy = s.number("lab", "pulse_energy", true).value_or(0.0);
        lab.area = s.number("lab", "area", true).value_or(1.0);
        lab.chi2 = s.number("lab", "chi2", false);
        lab.chi3 = s.number("lab", "chi3", false);
        lab.n_a = s.number("lab", "n_a", true).value_or(1.0);
        lab.n_b = s.number("lab", "n_b", true).value_or(1.0);
        lab.n_c = s.number("lab", "n_c", true).value_or(1.0);
        lab.length = spec.length;
        lab.nu_a = spec.dispersion.a.nu;
        lab.nu_b = spec.dispersion.b.nu;
        lab.nu_c = spec.pump.nu;
        lab.v_a = spec.dispersion.a.group_velocity;
        lab.v_b = spec.dispersion.b.group_velocity;
        lab.v_c = spec.dispersion.p.group_velocity;
        lab.kappa_c = spec.dispersion.p.gvd;
        lab.type_one = spec.kind == ProcessKind::SPDC_TypeI;
        lab.sigma = sfwm ? 1.0 / (2.0 * spec.pump.tau) : 1.0 / (std::numbers::sqrt2 * spec.pump.tau);
        if (sfwm && !lab.chi3) s.errors.push_back("lab.chi3 is required for sfwm");
        if (!sfwm && !lab.chi2) s.errors.push_back("lab.chi2 is required for " + std::string(to_string(spec.kind)));
        if (lab.chi2 && lab.chi3) s.errors.push_back("lab.chi2 and lab.chi3 are mutually exclusive");
        if (!(lab.pulse_energy >= 0.0)) s.errors.push_back("lab.pulse_energy must be non-negative");
        if (!(lab.area > 0.0)) s.errors.push_back("lab.area must be positive");
        if (!(lab.n_a > 0.0 && lab.n_b > 0.0 && lab.n_c > 0.0)) s.errors.push_back("lab refractive indices must be positive");
        cfg.lab = lab;
    }

    if (s.errors.empty()) {
        for (auto& e : validation_errors(spec)) s.errors.push_back(e);
    }
    if (s.errors.empty() && cfg.lab) {
        try {
            spec.epsilon = sfwm ? epsilon_chi3(*cfg.lab) : epsilon_chi2(*cfg.lab);
        } catch (const InvalidParameter& e) {
            s.errors.push_back(e.what());
        }
    }

    if (!s.errors.empty()) {
        std::string msg;
        for (const auto& e : s.errors) msg += (msg.empty() ? "" : "\n") + e;
        throw ValidationError(msg);
    }
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_text(ss.str());
}

} // namespace timeorder
