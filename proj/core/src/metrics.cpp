#include "ntrojan/metrics.hpp"

#include <algorithm>
#include <string>

#include "ntrojan/errors.hpp"
#include "ntrojan/rng.hpp"

namespace ntrojan {

double fraction(std::size_t hits, std::size_t total) {
  if (total == 0) throw SizeError("rate over an empty set");
  return static_cast<double>(hits) / static_cast<double>(total);
}

double trojan_activation_rate(std::span<const int> predictions, int trojan_label) {
  return fraction(static_cast<std::size_t>(std::count(predictions.begin(), predictions.end(), trojan_label)),
                  predictions.size());
}

double trojan_activation_rate(const MlpModel& ip, const TriggerSet& triggers) {
  if (triggers.size() == 0) throw SizeError("empty trigger set");
  return trojan_activation_rate(predict_batch(ip, triggers.images), triggers.trojan_label);
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ShapeError("prediction and label counts differ");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
  return fraction(hits, labels.size());
}

double accuracy(const MlpModel& ip, const Dataset& test) {
  if (!test.labeled()) throw ContractError("accuracy needs a labeled test set");
  if (test.size() == 0) throw ContractError("accuracy over an empty test set");
  return accuracy(predict_batch(ip, test.images), *test.labels);
}

GateMetrics gate_metrics(std::span<const Verdict> legit_verdicts, std::span<const Verdict> trigger_verdicts) {
  const auto anomalies = [](std::span<const Verdict> v) {
    return static_cast<std::size_t>(std::count(v.begin(), v.end(), Verdict::kAnomaly));
  };
  return {fraction(anomalies(trigger_verdicts), trigger_verdicts.size()),
          fraction(anomalies(legit_verdicts), legit_verdicts.size())};
}

GateMetrics gate_metrics(const AnomalyGate& gate, const Dataset& legit_test, const TriggerSet& triggers) {
  if (legit_test.size() == 0 || triggers.size() == 0) throw SizeError("gate metrics need both sets nonempty");
  return gate_metrics(gate_classify_batch(gate, legit_test.images), gate_classify_batch(gate, triggers.images));
}

double output_agreement(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ShapeError("prediction logs differ in length");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i] ? 1 : 0;
  return fraction(same, a.size());
}

double output_agreement(const MlpModel& a, const MlpModel& b, const Matrix& inputs) {
  if (inputs.rows() == 0) throw SizeError("no inputs to compare on");
  return output_agreement(predict_batch(a, inputs), predict_batch(b, inputs));
}

std::vector<SweepPoint> run_retraining_sweep(const MlpModel& ip, const Dataset& legit, std::span<const std::size_t> sizes,
                                             const TrainConfig& cfg, std::uint64_t subset_seed, const Dataset& test,
                                             const TriggerSet* triggers) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) throw ContractError("sweep sizes must ascend");
  if (!sizes.empty() && sizes.back() > legit.size()) {
    throw SizeError("sweep size " + std::to_string(sizes.back()) + " exceeds " + std::to_string(legit.size()) +
                    " available samples");
  }
  if (!test.labeled()) throw ContractError("sweep test set must be labeled");
  std::vector<SweepPoint> points;
  for (std::size_t n : sizes) {
    SweepPoint p;
    p.n_retrain = n;
    MlpModel model = ip;
    if (n > 0) {
      TrainConfig run = cfg;
      run.seed = derive_seed(cfg.seed, "retrain", n);
      model = retrain(ip, sample_subset(legit, n, derive_seed(subset_seed, "retrain-subset", n)), run);
    }
    p.test_predictions = predict_batch(model, test.images);
    p.accuracy = accuracy(p.test_predictions, *test.labels);
    if (triggers != nullptr) {
      p.trigger_predictions = predict_batch(model, triggers->images);
      p.activation_rate = trojan_activation_rate(p.trigger_predictions, triggers->trojan_label);
    }
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace ntrojan
