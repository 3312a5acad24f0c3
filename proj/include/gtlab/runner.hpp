#pragma once

/** \file runner.hpp
 *  Executes a parsed scenario: dispatches to the library, writes data
 *  artifacts and a JSON report. Reports carry no wall-clock data, so a fixed
 *  config and seed reproduce them byte for byte.
 */

#include <cstdint>

#include "gtlab/scenario.hpp"

namespace gtlab::runner {

struct RunOptions {
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool quiet = false;
    std::string emit = "both";  // csv | json | both
};

struct RunReport {
    int exit_code = 0;  ///< 0 ok, 2 numerical failure (diagnostic in report)
    std::string report_path;
    std::string json;  ///< serialized report content
};

std::uint64_t fnv1a64(const std::string& bytes);

/// Writes <prefix>_report.json plus the kind's data artifacts into out_dir.
RunReport run(const scenario::ScenarioConfig& cfg, const RunOptions& opt);

}  // namespace gtlab::runner
