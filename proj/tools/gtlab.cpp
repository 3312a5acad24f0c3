// Scenario-driven batch runner. Exit codes: 0 success, 1 configuration
// error, 2 numerical failure (diagnostic lands in the report).

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gtlab/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"gtlab: thermostat flows on surfaces and their transverse cocycles"};
    std::string scenario_path;
    gtlab::runner::RunOptions opt;
    app.add_option("--scenario", scenario_path, "scenario file (sectioned text or JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", opt.seed, "seed for sampled draws")->capture_default_str();
    app.add_flag("--quiet", opt.quiet, "suppress progress lines on stderr");
    app.add_option("--emit", opt.emit, "data artifact formats")
        ->check(CLI::IsMember({"csv", "json", "both"}))
        ->capture_default_str();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    std::string text;
    {
        std::ifstream in(scenario_path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }

    gtlab::scenario::ScenarioConfig cfg;
    try {
        cfg = gtlab::scenario::parse_scenario(text);
    } catch (const gtlab::scenario::ParseError& e) {
        std::fprintf(stderr, "config error at %s:%d:%d: %s\n", scenario_path.c_str(),
                     e.line, e.col, e.what());
        return 1;
    } catch (const gtlab::scenario::ValidationError& e) {
        std::fprintf(stderr, "config error in field %s: %s\n", e.field.c_str(), e.what());
        return 1;
    }

    try {
        return gtlab::runner::run(cfg, opt).exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fatal: %s\n", e.what());
        return 2;
    }
}
