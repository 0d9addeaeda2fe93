#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ntrojan/anomaly.hpp"
#include "ntrojan/autoencoder.hpp"
#include "ntrojan/metrics.hpp"
#include "ntrojan/train.hpp"

namespace ntrojan {

struct DataPaths {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  /// Directory of PGM triggers; synthetic glyphs are used when empty.
  std::filesystem::path trigger_dir;
};

struct ExperimentConfig {
  DataPaths paths;
  std::vector<int> trojan_labels{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t trigger_count = 1016;
  double trigger_test_fraction = 0.15;
  TrainConfig ip_training{};
  TrainConfig retraining{.learning_rate = 4.0, .epochs = 10, .batch_size = 8, .seed = 0, .trigger_repeat = 1};
  AutoencoderConfig autoencoder{};
  GateConfig gate{};
  std::vector<GateBackend> gate_backends{GateBackend::kDecisionTree, GateBackend::kSvm};
  std::vector<std::size_t> retrain_sizes{1000, 2000, 3000, 4000, 5000, 6000, 7000, 8000, 9000, 10000, 11000, 12000};
  std::uint64_t master_seed = 1;
  std::size_t jobs = 1;

  void validate() const;
};

/// Metrics of one benchmark (one trojan label, or the trojan-free IP).
struct EvalReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::optional<int> trojan_label;
  std::string model_fingerprint;
  std::size_t trigger_repeat = 0;
  std::size_t trigger_test_size = 0;
  std::string trigger_source;

  double legit_accuracy = 0.0;
  std::optional<double> trojan_activation_rate;

  struct GateResult {
    GateBackend backend;
    double detection_rate;
    double false_positive;
  };
  std::vector<GateResult> gates;

  std::vector<SweepPoint> sweep_points;

  std::optional<double> ae_legit_accuracy;
  std::optional<double> ae_activation_rate;
  /// Defended predictions on triggers vs the defended trojan-free IP.
  std::optional<double> output_agreement;

  /// Per-sample outcomes backing every rate above.
  struct Log {
    std::vector<int> test_predictions;
    std::vector<int> trigger_predictions;
    std::vector<int> ae_test_predictions;
    std::vector<int> ae_trigger_predictions;
  } log;

  /// Throws ContractError if a fraction leaves [0,1] or sweep sizes are unsorted.
  void validate() const;
};

/// Shared, label-independent inputs of an experiment.
struct ExperimentData {
  Dataset train;
  Dataset test;
  /// Trigger images; the trojan label is assigned per benchmark.
  TriggerSet trigger_train;
  TriggerSet trigger_test;
  std::string trigger_source;
};

ExperimentData load_experiment_data(const ExperimentConfig& cfg);

struct ExperimentResult {
  std::vector<EvalReport> reports;
  /// Gate verdicts on the test set and trigger test set, per backend.
  struct GateLog {
    GateBackend backend;
    std::vector<Verdict> test_verdicts;
    std::vector<Verdict> trigger_verdicts;
  };
  std::vector<GateLog> gate_logs;
  std::vector<int> test_labels;
};

using ProgressFn = std::function<void(std::string_view)>;

/// Trains the trojan-free IP, one trojan IP per label, the autoencoder and
/// the gates; evaluates every defense. Writes models and reports into
/// out_dir (when non-empty). Fully determined by cfg.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentData& data,
                                const std::filesystem::path& out_dir, const ProgressFn& progress = {});

/// Writes the report CSV (one row per scenario and defense).
std::string reports_to_csv(const std::vector<EvalReport>& reports, std::uint64_t master_seed);

inline constexpr std::string_view kReportCsvHeader =
    "scenario,seed,trojan_label,defense,legit_accuracy,activation_rate,detection_rate,false_positive,output_agreement,"
    "n_retrain";

}  // namespace ntrojan
