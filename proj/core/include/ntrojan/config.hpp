#pragma once

#include <string>
#include <string_view>

#include "ntrojan/experiment.hpp"

namespace ntrojan {

/// Overlays a JSON configuration document onto cfg. Sections: data,
/// experiment, ip_training, retraining, autoencoder, gate. Unknown keys and
/// ill-typed values throw UsageError.
void merge_config_json(ExperimentConfig& cfg, std::string_view json_text);

/// Reads and merges a configuration file.
void merge_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// The fully resolved configuration as pretty-printed JSON (same schema).
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace ntrojan
