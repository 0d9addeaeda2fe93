#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ntrojan/experiment.hpp"

namespace ntrojan::cli {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kContractError = 3,
};

/// Values given explicitly on the command line; unset members keep the
/// value from the config file or the built-in default.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> train_images, train_labels, test_images, test_labels, trigger_dir;
  std::optional<std::size_t> epochs, batch_size, trigger_repeat, trigger_count, jobs;
  std::optional<double> learning_rate;
  std::optional<std::vector<int>> trojan_labels;
  std::optional<std::vector<std::size_t>> retrain_sizes;
};

/// Which training section the --epochs/--learning-rate/--batch-size flags edit.
enum class TrainTarget { kIp, kRetrain, kAutoencoder };

/// Built-in defaults < NT_SEED (seed only) < config file < flags.
ExperimentConfig resolve_config(const std::optional<std::string>& env_seed,
                                const std::optional<std::filesystem::path>& config_file, const Overrides& flags,
                                TrainTarget target = TrainTarget::kIp);

/// Parses argv, runs one command, and returns its exit status. Machine
/// output goes to `out`, progress and diagnostics to `err`.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ntrojan::cli
