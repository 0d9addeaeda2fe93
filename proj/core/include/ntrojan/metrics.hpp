#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ntrojan/anomaly.hpp"
#include "ntrojan/dataset.hpp"
#include "ntrojan/mlp.hpp"
#include "ntrojan/train.hpp"

namespace ntrojan {

/// hits / total, with SizeError on an empty denominator.
double fraction(std::size_t hits, std::size_t total);

/// Share of triggers the IP assigns to the trojan label.
double trojan_activation_rate(const MlpModel& ip, const TriggerSet& triggers);
double trojan_activation_rate(std::span<const int> predictions, int trojan_label);

/// Share of labeled samples predicted correctly.
double accuracy(const MlpModel& ip, const Dataset& test);
double accuracy(std::span<const int> predictions, std::span<const int> labels);

struct GateMetrics {
  /// Triggers flagged as anomalies / triggers.
  double detection_rate;
  /// Legitimate samples flagged as anomalies / legitimate samples.
  double false_positive;
};

GateMetrics gate_metrics(const AnomalyGate& gate, const Dataset& legit_test, const TriggerSet& triggers);
GateMetrics gate_metrics(std::span<const Verdict> legit_verdicts, std::span<const Verdict> trigger_verdicts);

/// Share of input rows on which the two models predict the same class.
double output_agreement(const MlpModel& a, const MlpModel& b, const Matrix& inputs);
double output_agreement(std::span<const int> a, std::span<const int> b);

struct SweepPoint {
  std::size_t n_retrain = 0;
  /// Absent for models without a trojan.
  std::optional<double> activation_rate;
  double accuracy = 0.0;
  std::vector<int> test_predictions;
  std::vector<int> trigger_predictions;
};

/// Retrains a fresh copy of `ip` for each subset size and evaluates it.
/// Subset n is drawn with seed derive_seed(subset_seed, "retrain-subset", n);
/// n = 0 evaluates the untouched IP. Sizes must ascend and not exceed |legit|.
std::vector<SweepPoint> run_retraining_sweep(const MlpModel& ip, const Dataset& legit, std::span<const std::size_t> sizes,
                                             const TrainConfig& cfg, std::uint64_t subset_seed, const Dataset& test,
                                             const TriggerSet* triggers);

}  // namespace ntrojan
