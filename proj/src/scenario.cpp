#include "gtlab/scenario.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <set>
#include <sstream>

namespace gtlab::scenario {

namespace {

using nlohmann::json;

const std::set<std::string> kKinds{"orbit", "lyapunov", "periodic", "cone",
                                   "domination", "surgery", "franks", "cslab"};
const std::set<std::string> kMetricKeys{"kind", "f"};
const std::set<std::string> kFieldKeys{"c1", "c2", "U"};
const std::set<std::string> kRunKeys{
    "kind",     "T",           "h",       "x0",          "y0",
    "phi0",     "window",      "section_axis", "section_value", "returns",
    "tol",      "max_iters",   "cone_k",  "grid_stride", "l_max",
    "samples",  "sample_spacing", "alpha", "trials",     "zeta_scale",
    "epsilon",  "max_len",     "mane_alpha"};
const std::set<std::string> kOutputKeys{"prefix"};
const std::set<std::string> kCslabKeys{"letter"};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_real(const std::string& tok, const std::string& field) {
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw ValidationError("'" + tok + "' is not a number", field);
    }
    if (pos != tok.size() || !std::isfinite(v))
        throw ValidationError("'" + tok + "' is not a finite number", field);
    return v;
}

int parse_integer(const std::string& tok, const std::string& field) {
    size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        throw ValidationError("'" + tok + "' is not an integer", field);
    }
    if (pos != tok.size()) throw ValidationError("'" + tok + "' is not an integer", field);
    return static_cast<int>(v);
}

geom::TrigTerm parse_term(const std::string& value, const std::string& field) {
    std::istringstream iss(value);
    std::string coeff, kind, k1s, k2s, extra;
    if (!(iss >> coeff >> kind >> k1s >> k2s) || (iss >> extra))
        throw ValidationError("expected '<coeff> <cos|sin> <k1> <k2>', got '" + value + "'",
                              field);
    geom::TrigTerm t;
    t.coeff = parse_real(coeff, field);
    if (kind == "cos")
        t.is_sin = false;
    else if (kind == "sin")
        t.is_sin = true;
    else
        throw ValidationError("expected cos or sin, got '" + kind + "'", field);
    t.k1 = parse_integer(k1s, field);
    t.k2 = parse_integer(k2s, field);
    return t;
}

struct Draft {
    std::vector<geom::TrigTerm> f_terms, u_terms;
    double c1 = 0.0, c2 = 0.0;
    std::string metric_kind;
    RunParams run;
    OutputParams output;
    std::vector<std::array<double, 4>> letters;
};

void assign_run_key(Draft& d, const std::string& key, const std::string& value) {
    const std::string field = "run." + key;
    RunParams& r = d.run;
    if (key == "kind") {
        r.kind = value;
    } else if (key == "section_axis") {
        if (value == "x")
            r.section_axis = 0;
        else if (value == "y")
            r.section_axis = 1;
        else
            throw ValidationError("section_axis must be x or y", field);
    } else if (key == "T") {
        r.T = parse_real(value, field);
    } else if (key == "h") {
        r.h = parse_real(value, field);
    } else if (key == "x0") {
        r.x0 = parse_real(value, field);
    } else if (key == "y0") {
        r.y0 = parse_real(value, field);
    } else if (key == "phi0") {
        r.phi0 = parse_real(value, field);
    } else if (key == "window") {
        r.window = parse_real(value, field);
    } else if (key == "section_value") {
        r.section_value = parse_real(value, field);
    } else if (key == "returns") {
        r.returns = parse_integer(value, field);
    } else if (key == "tol") {
        r.tol = parse_real(value, field);
    } else if (key == "max_iters") {
        r.max_iters = parse_integer(value, field);
    } else if (key == "cone_k") {
        r.cone_k = parse_real(value, field);
    } else if (key == "grid_stride") {
        r.grid_stride = parse_integer(value, field);
    } else if (key == "l_max") {
        r.l_max = parse_integer(value, field);
    } else if (key == "samples") {
        r.samples = parse_integer(value, field);
    } else if (key == "sample_spacing") {
        r.sample_spacing = parse_real(value, field);
    } else if (key == "alpha") {
        r.alpha = parse_real(value, field);
    } else if (key == "trials") {
        r.trials = parse_integer(value, field);
    } else if (key == "zeta_scale") {
        r.zeta_scale = parse_real(value, field);
    } else if (key == "epsilon") {
        r.epsilon = parse_real(value, field);
    } else if (key == "max_len") {
        r.max_len = parse_integer(value, field);
    } else if (key == "mane_alpha") {
        r.mane_alpha = parse_real(value, field);
    }
}

// Canonical serialization of the parsed config: fixed field order, %.17g
// doubles. The report hashes this, so two files that parse to the same
// experiment (whitespace, comments, sectioned vs JSON) share a hash.
std::string canonical_source(const Draft& d) {
    std::ostringstream out;
    auto num = [](double x) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    auto terms = [&](const char* key, const std::vector<geom::TrigTerm>& ts) {
        for (const auto& t : ts)
            out << key << '=' << num(t.coeff) << (t.is_sin ? " sin " : " cos ")
                << t.k1 << ' ' << t.k2 << '\n';
    };
    out << "metric.kind=" << (d.metric_kind.empty() ? "flat" : d.metric_kind) << '\n';
    terms("metric.f", d.f_terms);
    out << "field.c1=" << num(d.c1) << '\n';
    out << "field.c2=" << num(d.c2) << '\n';
    terms("field.U", d.u_terms);
    const RunParams& r = d.run;
    out << "run.kind=" << r.kind << '\n'
        << "run.T=" << num(r.T) << '\n'
        << "run.h=" << num(r.h) << '\n'
        << "run.x0=" << num(r.x0) << '\n'
        << "run.y0=" << num(r.y0) << '\n'
        << "run.phi0=" << num(r.phi0) << '\n'
        << "run.window=" << num(r.window) << '\n'
        << "run.section_axis=" << r.section_axis << '\n'
        << "run.section_value=" << num(r.section_value) << '\n'
        << "run.returns=" << r.returns << '\n'
        << "run.tol=" << num(r.tol) << '\n'
        << "run.max_iters=" << r.max_iters << '\n'
        << "run.cone_k=" << num(r.cone_k) << '\n'
        << "run.grid_stride=" << r.grid_stride << '\n'
        << "run.l_max=" << r.l_max << '\n'
        << "run.samples=" << r.samples << '\n'
        << "run.sample_spacing=" << num(r.sample_spacing) << '\n'
        << "run.alpha=" << num(r.alpha) << '\n'
        << "run.trials=" << r.trials << '\n'
        << "run.zeta_scale=" << num(r.zeta_scale) << '\n'
        << "run.epsilon=" << num(r.epsilon) << '\n'
        << "run.max_len=" << r.max_len << '\n'
        << "run.mane_alpha=" << num(r.mane_alpha) << '\n';
    out << "output.prefix=" << d.output.prefix << '\n';
    for (const auto& m : d.letters)
        out << "cslab.letter=" << num(m[0]) << ' ' << num(m[1]) << ' ' << num(m[2])
            << ' ' << num(m[3]) << '\n';
    return out.str();
}

ScenarioConfig finalize(Draft&& d) {
    if (!d.metric_kind.empty()) {
        if (d.metric_kind != "flat" && d.metric_kind != "conformal")
            throw ValidationError("metric kind must be flat or conformal", "metric.kind");
        if (d.metric_kind == "flat" && !d.f_terms.empty())
            throw ValidationError("kind=flat contradicts nonempty f", "metric.kind");
    }
    if (kKinds.count(d.run.kind) == 0)
        throw ValidationError("unrecognized run kind '" + d.run.kind + "'", "run.kind");
    if (!(d.run.T > 0.0)) throw ValidationError("T must be positive", "run.T");
    if (!(d.run.h > 0.0)) throw ValidationError("h must be positive", "run.h");
    if (!(d.run.tol > 0.0)) throw ValidationError("tol must be positive", "run.tol");
    if (d.run.returns < 1) throw ValidationError("returns must be >= 1", "run.returns");
    if (d.run.max_iters < 1) throw ValidationError("max_iters must be >= 1", "run.max_iters");
    if (d.run.grid_stride < 1)
        throw ValidationError("grid_stride must be >= 1", "run.grid_stride");
    if (d.run.l_max < 1) throw ValidationError("l_max must be >= 1", "run.l_max");
    if (d.run.samples < 1) throw ValidationError("samples must be >= 1", "run.samples");
    if (d.run.trials < 0) throw ValidationError("trials must be >= 0", "run.trials");
    if (d.run.max_len < 1) throw ValidationError("max_len must be >= 1", "run.max_len");
    if (d.run.kind == "cone" && !(d.run.cone_k > 0.0 && d.run.cone_k < 0.5))
        throw ValidationError("cone_k must lie in (0, 1/2)", "run.cone_k");
    if (d.run.kind == "cslab") {
        if (d.letters.empty())
            throw ValidationError("kind=cslab needs at least one letter", "cslab.letter");
        if (!(d.run.epsilon > 0.0))
            throw ValidationError("epsilon must be positive", "run.epsilon");
    }
    if (d.output.prefix.empty() ||
        d.output.prefix.find_first_of("/\\") != std::string::npos)
        throw ValidationError("prefix must be a bare file name", "output.prefix");

    ScenarioConfig cfg;
    cfg.source = canonical_source(d);
    cfg.scenario.metric = geom::ConformalMetric(geom::TrigPoly(std::move(d.f_terms)));
    cfg.scenario.field =
        geom::ClosedFormField(d.c1, d.c2, geom::TrigPoly(std::move(d.u_terms)));
    cfg.run = std::move(d.run);
    cfg.output = std::move(d.output);
    for (const auto& m : d.letters) {
        Eigen::MatrixXd M(2, 2);
        M << m[0], m[1], m[2], m[3];
        try {
            cfg.letters.push_back(cs::validate_cs(M, 1e-9));
        } catch (const cs::NotConformal& e) {
            throw ValidationError(std::string("letter is not conformally symplectic: ") +
                                      e.what(),
                                  "cslab.letter");
        } catch (const cs::Singular& e) {
            throw ValidationError(std::string("letter is singular: ") + e.what(),
                                  "cslab.letter");
        }
    }
    return cfg;
}

ScenarioConfig parse_sectioned(const std::string& text) {
    Draft d;
    std::set<std::string> seen;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        int col = static_cast<int>(raw.find_first_not_of(" \t")) + 1;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("malformed section header '" + line + "'", lineno, col);
            section = line.substr(1, line.size() - 2);
            if (section != "metric" && section != "field" && section != "run" &&
                section != "output" && section != "cslab")
                throw ParseError("unknown section [" + section + "]", lineno, col);
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value', got '" + line + "'", lineno, col);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ParseError("key '" + key + "' appears before any section", lineno, col);
        const std::set<std::string>* allowed = nullptr;
        if (section == "metric")
            allowed = &kMetricKeys;
        else if (section == "field")
            allowed = &kFieldKeys;
        else if (section == "run")
            allowed = &kRunKeys;
        else if (section == "output")
            allowed = &kOutputKeys;
        else
            allowed = &kCslabKeys;
        if (allowed->count(key) == 0)
            throw ParseError("unknown key '" + key + "' in [" + section + "]", lineno, col);
        bool repeatable = (section == "metric" && key == "f") ||
                          (section == "field" && key == "U") ||
                          (section == "cslab" && key == "letter");
        if (!repeatable && !seen.insert(section + "." + key).second)
            throw ParseError("duplicate key '" + key + "' in [" + section + "]", lineno, col);
        if (value.empty())
            throw ParseError("empty value for key '" + key + "'", lineno, col);

        if (section == "metric") {
            if (key == "kind")
                d.metric_kind = value;
            else
                d.f_terms.push_back(parse_term(value, "metric.f"));
        } else if (section == "field") {
            if (key == "c1")
                d.c1 = parse_real(value, "field.c1");
            else if (key == "c2")
                d.c2 = parse_real(value, "field.c2");
            else
                d.u_terms.push_back(parse_term(value, "field.U"));
        } else if (section == "run") {
            assign_run_key(d, key, value);
        } else if (section == "output") {
            d.output.prefix = value;
        } else {
            std::istringstream iss(value);
            std::array<double, 4> m{};
            std::string tok;
            for (int i = 0; i < 4; ++i) {
                if (!(iss >> tok))
                    throw ValidationError("letter needs four entries, row-major",
                                          "cslab.letter");
                m[static_cast<size_t>(i)] = parse_real(tok, "cslab.letter");
            }
            if (iss >> tok)
                throw ValidationError("letter needs exactly four entries", "cslab.letter");
            d.letters.push_back(m);
        }
    }
    return finalize(std::move(d));
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (const auto& item : obj.items())
        if (allowed.count(item.key()) == 0)
            throw ParseError("unknown key '" + item.key() + "' in " + where, 0, 0);
}

std::string json_scalar(const json& v, const std::string& field) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_float()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    throw ValidationError("expected a scalar", field);
}

geom::TrigTerm json_term(const json& v, const std::string& field) {
    if (!v.is_array() || v.size() != 4)
        throw ValidationError("term must be [coeff, \"cos\"|\"sin\", k1, k2]", field);
    std::ostringstream oss;
    oss << json_scalar(v[0], field) << ' ' << json_scalar(v[1], field) << ' '
        << json_scalar(v[2], field) << ' ' << json_scalar(v[3], field);
    return parse_term(oss.str(), field);
}

ScenarioConfig parse_json_mirror(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        int line = 1, col = 1;
        for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(std::string("json: ") + e.what(), line, col);
    }
    if (!j.is_object()) throw ParseError("top level must be an object", 1, 1);
    reject_unknown(j, {"metric", "field", "run", "output", "cslab"}, "top level");

    Draft d;
    if (j.contains("metric")) {
        const json& m = j["metric"];
        reject_unknown(m, kMetricKeys, "metric");
        if (m.contains("kind")) d.metric_kind = json_scalar(m["kind"], "metric.kind");
        if (m.contains("f")) {
            if (!m["f"].is_array())
                throw ValidationError("f must be an array of terms", "metric.f");
            for (const auto& t : m["f"]) d.f_terms.push_back(json_term(t, "metric.f"));
        }
    }
    if (j.contains("field")) {
        const json& f = j["field"];
        reject_unknown(f, kFieldKeys, "field");
        if (f.contains("c1")) d.c1 = parse_real(json_scalar(f["c1"], "field.c1"), "field.c1");
        if (f.contains("c2")) d.c2 = parse_real(json_scalar(f["c2"], "field.c2"), "field.c2");
        if (f.contains("U")) {
            if (!f["U"].is_array())
                throw ValidationError("U must be an array of terms", "field.U");
            for (const auto& t : f["U"]) d.u_terms.push_back(json_term(t, "field.U"));
        }
    }
    if (j.contains("run")) {
        const json& r = j["run"];
        reject_unknown(r, kRunKeys, "run");
        for (const auto& item : r.items())
            assign_run_key(d, item.key(), json_scalar(item.value(), "run." + item.key()));
    }
    if (j.contains("output")) {
        reject_unknown(j["output"], kOutputKeys, "output");
        if (j["output"].contains("prefix"))
            d.output.prefix = json_scalar(j["output"]["prefix"], "output.prefix");
    }
    if (j.contains("cslab")) {
        reject_unknown(j["cslab"], {"letters"}, "cslab");
        if (j["cslab"].contains("letters")) {
            const json& ls = j["cslab"]["letters"];
            if (!ls.is_array())
                throw ValidationError("letters must be an array of 4-arrays", "cslab.letter");
            for (const auto& l : ls) {
                if (!l.is_array() || l.size() != 4)
                    throw ValidationError("letter must be [a, b, c, d] row-major",
                                          "cslab.letter");
                std::array<double, 4> m{};
                for (size_t i = 0; i < 4; ++i)
                    m[i] = parse_real(json_scalar(l[i], "cslab.letter"), "cslab.letter");
                d.letters.push_back(m);
            }
        }
    }
    return finalize(std::move(d));
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
    size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') return parse_json_mirror(text);
    return parse_sectioned(text);
}

}  // namespace gtlab::scenario
