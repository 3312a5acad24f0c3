#pragma once

/** \file scenario.hpp
 *  Text configuration for experiment runs: a small sectioned key-value
 *  grammar with a JSON-compatible alternative. Parsing is strict; unknown
 *  sections or keys are rejected with position information.
 */

#include <cstdint>
#include <string>

#include "gtlab/cs_linalg.hpp"
#include "gtlab/flow.hpp"

namespace gtlab::scenario {

struct ParseError : std::runtime_error {
    int line = 0;
    int col = 0;
    ParseError(const std::string& w, int line_, int col_)
        : std::runtime_error(w), line(line_), col(col_) {}
};

struct ValidationError : std::runtime_error {
    std::string field;
    ValidationError(const std::string& w, std::string field_)
        : std::runtime_error(w), field(std::move(field_)) {}
};

struct RunParams {
    std::string kind = "orbit";
    double T = 10.0;
    double h = 1e-2;
    double x0 = 0.0, y0 = 0.0, phi0 = 0.0;
    double window = 20.0;

    int section_axis = 1;  // 0 = x, 1 = y
    double section_value = 0.0;
    int returns = 1;
    double tol = 1e-11;
    int max_iters = 30;

    double cone_k = 0.25;
    int grid_stride = 1;

    int l_max = 6;
    int samples = 4;
    double sample_spacing = 5.0;

    double alpha = 0.1;  // surgery shift

    int trials = 8;           // franks random draws
    double zeta_scale = 1.0;

    double epsilon = 1e-6;  // cslab homothety residual
    int max_len = 6;
    double mane_alpha = 0.0;  // cslab: scan when > 0
};

struct OutputParams {
    std::string prefix = "run";
};

struct ScenarioConfig {
    flow::Scenario scenario;
    RunParams run;
    OutputParams output;
    std::vector<cs::CSMatrix> letters;  // cslab input
    std::string source;  // canonical serialization, hashed for the report
};

/// Parses either the sectioned grammar or, when the first non-space byte is
/// '{', the JSON mirror of it. Throws ParseError / ValidationError.
ScenarioConfig parse_scenario(const std::string& text);

}  // namespace gtlab::scenario
