#pragma once

#include <string>
#include <vector>

#include "sldp/config.hpp"

namespace sldp {

inline constexpr const char* kToolVersion = "sldp 0.1.0";

struct RunManifest {
    std::string config_hash;
    std::string tool_version;
    std::string kind;
    double wall_time_seconds = 0.0;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> level_seeds;  // per-epsilon / per-ensemble seeds
    std::vector<std::string> outputs;        // files relative to the run dir
    std::string canonical_config;

    std::string to_json() const;
    static RunManifest from_json_file(const std::string& filename);
};

/// Executes the experiment described by a config file. Writes JSON records,
/// CSV curves and manifest.json into the output directory, which the run owns
/// exclusively through a lock file. Numeric payload files are byte-identical
/// across re-runs of the same config.
RunManifest run_experiment(const Config& config, const std::string& output_dir_override = "");

/// Renders the persisted records of a run directory as a human-readable table
/// plus a plot-ready report.csv; no recomputation.
std::string report_run(const std::string& run_dir);

}  // namespace sldp
