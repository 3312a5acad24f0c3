#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include <gtlab/runner.hpp>
#include <gtlab/scenario.hpp>

using namespace gtlab;
using scenario::ParseError;
using scenario::ValidationError;
using scenario::parse_scenario;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

/// Fresh directory under the build tree; unique per call.
fs::path work_dir(const std::string& tag) {
    static int counter = 0;
    fs::path d = fs::temp_directory_path() /
                 ("gtlab_scn_" + tag + "_" + std::to_string(counter++));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("empty config yields the documented defaults") {
    auto cfg = parse_scenario("");
    CHECK(cfg.run.kind == "orbit");
    CHECK(cfg.run.T == 10.0);
    CHECK(cfg.run.h == 1e-2);
    CHECK(cfg.run.section_axis == 1);
    CHECK(cfg.output.prefix == "run");
    CHECK(cfg.scenario.metric.kind() == geom::MetricKind::flat);
    CHECK(cfg.scenario.field.c1() == 0.0);
}

TEST_CASE("sectioned grammar round trip") {
    const char* text =
        "# comment line\n"
        "[metric]\n"
        "kind = conformal\n"
        "f = 0.05 cos 1 1   # inline comment\n"
        "f = 0.03 sin 0 1\n"
        "\n"
        "[field]\n"
        "c1 = 0.3\n"
        "c2 = -0.2\n"
        "U = 0.04 sin 1 -1\n"
        "\n"
        "[run]\n"
        "kind = lyapunov\n"
        "T = 250\n"
        "h = 5e-3\n"
        "phi0 = 1.25\n"
        "section_axis = x\n"
        "\n"
        "[output]\n"
        "prefix = trial\n";
    auto cfg = parse_scenario(text);
    CHECK(cfg.run.kind == "lyapunov");
    CHECK(cfg.run.T == 250.0);
    CHECK(cfg.run.h == 5e-3);
    CHECK(cfg.run.phi0 == 1.25);
    CHECK(cfg.run.section_axis == 0);
    CHECK(cfg.output.prefix == "trial");
    CHECK(cfg.scenario.field.c1() == 0.3);
    CHECK(cfg.scenario.field.c2() == -0.2);
    CHECK(cfg.scenario.metric.kind() == geom::MetricKind::conformal);
    // f(0,0) = 0.05 cos 0 + 0.03 sin 0 = 0.05
    CHECK(cfg.scenario.metric.f_at({0.0, 0.0}) == doctest::Approx(0.05));
    // U(x,y) present: gamma has a dU part
    CHECK_FALSE(cfg.scenario.field.U().empty());
}

TEST_CASE("parse errors carry position and the offending token") {
    auto expect_parse_error = [](const char* text, int line, const char* what) {
        try {
            (void)parse_scenario(text);
            FAIL("expected ParseError for: " << text);
        } catch (const ParseError& e) {
            CHECK(e.line == line);
            CHECK(std::string(e.what()).find(what) != std::string::npos);
        }
    };
    expect_parse_error("[metrric]\n", 1, "metrric");
    expect_parse_error("[run]\nmetrric = 1\n", 2, "metrric");
    expect_parse_error("[run]\nT = 1\nT = 2\n", 3, "duplicate");
    expect_parse_error("[run]\njust words\n", 2, "key = value");
    expect_parse_error("T = 1\n", 1, "before any section");
    expect_parse_error("[run]\nT =\n", 2, "empty value");
    expect_parse_error("[run\n", 1, "malformed");
}

TEST_CASE("validation errors name the field") {
    auto expect_validation = [](const std::string& text, const char* field) {
        try {
            (void)parse_scenario(text);
            FAIL("expected ValidationError for: " << text);
        } catch (const ValidationError& e) {
            CHECK(std::string(e.field) == field);
        }
    };
    expect_validation("[run]\nT = abc\n", "run.T");
    expect_validation("[run]\nT = -5\n", "run.T");
    expect_validation("[run]\nh = 0\n", "run.h");
    expect_validation("[run]\nkind = wobble\n", "run.kind");
    expect_validation("[run]\nsection_axis = z\n", "run.section_axis");
    expect_validation("[run]\nreturns = 0\n", "run.returns");
    expect_validation("[metric]\nf = 0.05 cos 1\n", "metric.f");
    expect_validation("[metric]\nf = 0.05 tan 1 1\n", "metric.f");
    expect_validation("[metric]\nkind = flat\nf = 0.1 cos 1 0\n", "metric.kind");
    expect_validation("[metric]\nkind = hyperbolic\n", "metric.kind");
    expect_validation("[run]\nkind = cone\ncone_k = 0.7\n", "run.cone_k");
    expect_validation("[run]\nkind = cslab\n", "cslab.letter");
    expect_validation("[cslab]\nletter = 1 0 0\n[run]\nkind = cslab\n", "cslab.letter");
    expect_validation("[cslab]\nletter = 1 0 0 -1\n[run]\nkind = cslab\n", "cslab.letter");
    expect_validation("[cslab]\nletter = 1 1 2 2\n[run]\nkind = cslab\n", "cslab.letter");
    expect_validation("[output]\nprefix = a/b\n", "output.prefix");
}

TEST_CASE("json mirror parses to the same configuration") {
    const char* sectioned =
        "[metric]\nf = 0.05 cos 1 1\n[field]\nc1 = 0.3\nU = 0.04 sin 1 -1\n"
        "[run]\nkind = orbit\nT = 2\nh = 1e-2\nphi0 = 0.7\n[output]\nprefix = twin\n";
    const char* as_json =
        "{\"metric\": {\"f\": [[0.05, \"cos\", 1, 1]]},"
        " \"field\": {\"c1\": 0.3, \"U\": [[0.04, \"sin\", 1, -1]]},"
        " \"run\": {\"kind\": \"orbit\", \"T\": 2, \"h\": 1e-2, \"phi0\": 0.7},"
        " \"output\": {\"prefix\": \"twin\"}}";
    auto a = parse_scenario(sectioned);
    auto b = parse_scenario(as_json);
    CHECK(a.run.T == b.run.T);
    CHECK(a.run.h == b.run.h);
    CHECK(a.run.phi0 == b.run.phi0);
    CHECK(a.scenario.field.c1() == b.scenario.field.c1());
    CHECK(a.scenario.metric.f_at({0.3, 0.9}) == b.scenario.metric.f_at({0.3, 0.9}));
    // the report hashes the canonical serialization, not the raw file
    CHECK(a.source == b.source);

    // identical dynamics: artifacts agree byte for byte
    auto da = work_dir("twin_a"), db = work_dir("twin_b");
    auto ra = runner::run(a, {da.string(), 0, true, "csv"});
    auto rb = runner::run(b, {db.string(), 0, true, "csv"});
    REQUIRE(ra.exit_code == 0);
    REQUIRE(rb.exit_code == 0);
    CHECK(slurp(da / "twin_orbit.csv") == slurp(db / "twin_orbit.csv"));
}

TEST_CASE("json mirror rejections") {
    CHECK_THROWS_AS((void)parse_scenario("{\"run\": {\"T\": 1,}}"), ParseError);
    CHECK_THROWS_AS((void)parse_scenario("{\"rum\": {}}"), ParseError);
    CHECK_THROWS_AS((void)parse_scenario("{\"run\": {\"T\": \"abc\"}}"), ValidationError);
    CHECK_THROWS_AS((void)parse_scenario("{\"metric\": {\"f\": [[1, \"cos\", 1]]}}"),
                    ValidationError);
    CHECK_THROWS_AS((void)parse_scenario("[1, 2]"), ParseError);
}

TEST_CASE("runner: orbit artifacts, report schema, emit selection") {
    const char* text =
        "[field]\nc1 = 0.5\n[run]\nkind = orbit\nT = 2\nh = 1e-2\ny0 = 0.25\n"
        "[output]\nprefix = circle\n";
    auto cfg = parse_scenario(text);

    auto dir = work_dir("orbit");
    auto rep = runner::run(cfg, {dir.string(), 0, true, "both"});
    CHECK(rep.exit_code == 0);
    CHECK(fs::exists(dir / "circle_report.json"));
    CHECK(fs::exists(dir / "circle_orbit.csv"));
    CHECK(fs::exists(dir / "circle_orbit.json"));
    CHECK(fs::exists(dir / "circle_cocycle.csv"));

    auto j = nlohmann::json::parse(rep.json);
    CHECK(j["schema"] == "gtlab-report-v1");
    CHECK(j["status"] == "ok");
    CHECK(j["kind"] == "orbit");
    CHECK(j["scenario_hash"].get<std::string>().size() == 16);
    CHECK(j["outputs"]["max_energy_drift"].get<double>() <= 1e-8);
    CHECK(j["artifacts"].size() == 3);

    std::string header = slurp(dir / "circle_orbit.csv").substr(0, 34);
    CHECK(header == "t,x,y,v1,v2,e1x,e1y,sigma,energy\n0");

    auto dir2 = work_dir("orbit_jsononly");
    (void)runner::run(cfg, {dir2.string(), 0, true, "json"});
    CHECK_FALSE(fs::exists(dir2 / "circle_orbit.csv"));
    CHECK(fs::exists(dir2 / "circle_orbit.json"));
}

TEST_CASE("runner: lyapunov report carries the exponent pair") {
    const char* text =
        "[field]\nc1 = 0.5\n[run]\nkind = lyapunov\nT = 200\nh = 1e-2\ny0 = 0.25\n"
        "[output]\nprefix = lyap\n";
    auto dir = work_dir("lyap");
    auto rep = runner::run(parse_scenario(text), {dir.string(), 0, true, "both"});
    REQUIRE(rep.exit_code == 0);
    auto j = nlohmann::json::parse(rep.json);
    auto ex = j["outputs"]["exponents"].get<std::vector<double>>();
    REQUIRE(ex.size() == 2);
    CHECK(std::abs(ex[0] - (-0.5)) <= 1e-2);
    CHECK(std::abs(ex[1]) <= 1e-2);
    CHECK(j["outputs"]["pairing_residual"].get<double>() <= 1e-3);
}

TEST_CASE("runner: periodic report matches the attracting circle") {
    const char* text =
        "[field]\nc1 = 0.5\n[run]\nkind = periodic\nT = 50\nh = 1e-3\ny0 = 0.25\n"
        "phi0 = 0.12\nsection_axis = x\n[output]\nprefix = per\n";
    auto dir = work_dir("per");
    auto rep = runner::run(parse_scenario(text), {dir.string(), 0, true, "both"});
    REQUIRE(rep.exit_code == 0);
    auto j = nlohmann::json::parse(rep.json);
    CHECK(std::abs(j["outputs"]["period"].get<double>() - 1.0) <= 1e-8);
    CHECK(std::abs(j["outputs"]["beta"].get<double>() - 0.5) <= 1e-8);
    CHECK(j["outputs"]["winding"][0] == 1);
    CHECK(j["outputs"]["winding"][1] == 0);
    CHECK(j["outputs"]["classification"]["class"] == "non_hyperbolic");
}

TEST_CASE("runner: status and exit codes for failing configurations") {
    // T too short for the exponent sampler: a configuration error
    const char* bad_cfg =
        "[run]\nkind = lyapunov\nT = 5\nh = 1e-2\n[output]\nprefix = short\n";
    auto d1 = work_dir("cfgerr");
    auto r1 = runner::run(parse_scenario(bad_cfg), {d1.string(), 0, true, "both"});
    CHECK(r1.exit_code == 1);
    auto j1 = nlohmann::json::parse(r1.json);
    CHECK(j1["status"] == "config_error");
    CHECK(j1.contains("error"));

    // no section return inside max_period: a numerical failure
    const char* no_return =
        "[field]\nc1 = 0.5\n[run]\nkind = periodic\nT = 0.5\nh = 1e-3\ny0 = 0.25\n"
        "section_axis = x\n[output]\nprefix = noret\n";
    auto d2 = work_dir("numerr");
    auto r2 = runner::run(parse_scenario(no_return), {d2.string(), 0, true, "both"});
    CHECK(r2.exit_code == 2);
    auto j2 = nlohmann::json::parse(r2.json);
    CHECK(j2["status"] == "numerical_failure");
    // the report file still lands on disk
    CHECK(fs::exists(d2 / "noret_report.json"));
}

TEST_CASE("runner: identical config and seed reproduce every byte") {
    const char* text =
        "[metric]\nf = 0.05 cos 1 1\n[field]\nc1 = 0.3\nc2 = -0.2\n"
        "[run]\nkind = orbit\nT = 3\nh = 1e-2\nx0 = 0.15\ny0 = 0.62\nphi0 = 1.37\n"
        "[output]\nprefix = det\n";
    auto cfg = parse_scenario(text);
    auto da = work_dir("det_a"), db = work_dir("det_b");
    auto ra = runner::run(cfg, {da.string(), 7, true, "both"});
    auto rb = runner::run(cfg, {db.string(), 7, true, "both"});
    REQUIRE(ra.exit_code == 0);
    REQUIRE(rb.exit_code == 0);
    CHECK(ra.json == rb.json);
    CHECK(slurp(da / "det_report.json") == slurp(db / "det_report.json"));
    CHECK(slurp(da / "det_orbit.csv") == slurp(db / "det_orbit.csv"));
    CHECK(slurp(da / "det_orbit.json") == slurp(db / "det_orbit.json"));
    CHECK(slurp(da / "det_cocycle.csv") == slurp(db / "det_cocycle.csv"));
}

TEST_CASE("runner: franks draws are seeded") {
    const char* text =
        "[metric]\nf = 0.05 cos 1 1\n[field]\nc1 = 0.3\n"
        "[run]\nkind = franks\nh = 1e-3\ntrials = 3\n[output]\nprefix = fr\n";
    auto cfg = parse_scenario(text);
    auto da = work_dir("fr_a"), db = work_dir("fr_b"), dc = work_dir("fr_c");
    auto ra = runner::run(cfg, {da.string(), 11, true, "both"});
    auto rb = runner::run(cfg, {db.string(), 11, true, "both"});
    auto rc = runner::run(cfg, {dc.string(), 12, true, "both"});
    REQUIRE(ra.exit_code == 0);
    CHECK(ra.json == rb.json);
    auto ja = nlohmann::json::parse(ra.json);
    auto jc = nlohmann::json::parse(rc.json);
    CHECK(ja["outputs"]["worst_rate_gap"].get<double>() <= 1e-9);
    CHECK(ja["outputs"]["zero_draw_Z1_norm"].get<double>() == 0.0);
    // a different seed draws different perturbations
    CHECK(ja["outputs"]["worst_rate_gap"] != jc["outputs"]["worst_rate_gap"]);
}

TEST_CASE("runner: cslab finds the scaled-rotation homothety") {
    std::string text = slurp(fs::path(GTLAB_SOURCE_DIR) / "scenarios" /
                             "cslab_scaled_rotation.scn");
    auto dir = work_dir("cslab");
    auto rep = runner::run(parse_scenario(text), {dir.string(), 0, true, "both"});
    REQUIRE(rep.exit_code == 0);
    auto j = nlohmann::json::parse(rep.json);
    REQUIRE_FALSE(j["outputs"]["homothety"].is_null());
    CHECK(j["outputs"]["homothety"]["word"].get<std::string>().find("L0^4") !=
          std::string::npos);
    CHECK(std::abs(j["outputs"]["homothety"]["scalar"].get<double>() -
                   (-1.4641)) <= 1e-9);
    CHECK(j["outputs"]["mane_s"].get<double>() == 0.0);
    // moduli 1.1 on both eigenvalues: off the unit circle
    CHECK(j["outputs"]["pairing"]["hyperbolic"].get<bool>());
}

TEST_CASE("golden scenarios all parse and run clean") {
    fs::path dir = fs::path(GTLAB_SOURCE_DIR) / "scenarios";
    REQUIRE(fs::exists(dir));
    int count = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto cfg = parse_scenario(slurp(entry.path()));
        auto out = work_dir("golden_" + entry.path().stem().string());
        auto rep = runner::run(cfg, {out.string(), 0, true, "both"});
        INFO("scenario file: " << entry.path().filename().string());
        CHECK(rep.exit_code == 0);
        CHECK(fs::exists(out / (cfg.output.prefix + "_report.json")));
        ++count;
    }
    CHECK(count >= 8);
}
