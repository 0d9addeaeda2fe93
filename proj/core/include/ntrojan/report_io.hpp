#pragma once

#include <filesystem>
#include <string>

#include "ntrojan/experiment.hpp"

namespace ntrojan {

/// Structured summary: resolved config, every report, gate results and the
/// label-averaged headline numbers.
std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Per-sample prediction log of one benchmark.
std::string prediction_log_json(const EvalReport& report);

/// reports.csv, summary.json, and logs/<scenario>.json plus logs/gates.json.
void write_experiment_outputs(const std::filesystem::path& out_dir, const ExperimentConfig& cfg,
                              const ExperimentResult& result);

}  // namespace ntrojan
