#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psa/estimation.hpp"
#include "psa/models.hpp"

namespace psa {

struct ModelConfig {
    std::string kind;  // "linear" or "tabulated"
    double intercept = 0.0;
    std::vector<double> coefficients;
    std::string path;  // tabulated sample file
};

struct SampleConfig {
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

struct OutputConfig {
    std::string path = "results.csv";
    std::string format = "csv";  // "csv" or "json"
    double confidence = 0.95;
    std::optional<std::string> series_dir;  // per-curve (delta, s_hat, ci) files
};

struct RunConfig {
    ModelConfig model;
    std::vector<DistributionSpec> marginals;
    std::optional<SampleConfig> sample;
    std::vector<PlanEntry> plan;
    OutputConfig output;
};

// Loads and validates a JSON run configuration. Collects every violation and
// throws a single parameter_error listing all of them.
RunConfig load_config(const std::string& path);

// Executes a run end to end: build or ingest the sample, sweep, write the
// result table, print a summary. Returns a process exit code
// (0 ok, 2 config, 3 numerical, 4 I/O).
int run(const RunConfig& config, unsigned threads = 1,
        const std::optional<std::string>& output_override = std::nullopt);

}  // namespace psa
