#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ntrojan/dataset.hpp"
#include "ntrojan/mlp.hpp"

namespace ntrojan {

/// Minibatch SGD settings shared by every training routine.
struct TrainConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  /// Copies of each trigger image mixed into the poisoned training set.
  std::size_t trigger_repeat = 10;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch;
  /// Mean of the minibatch losses seen during the epoch.
  double mean_loss;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// One training sample: a borrowed input row and either a class label or,
/// for reconstruction training, the input itself as target.
struct TrainingView {
  std::vector<const double*> inputs;
  /// Empty for reconstruction targets.
  std::vector<int> labels;
  std::size_t width = 0;

  std::size_t size() const noexcept { return inputs.size(); }
  bool reconstruction() const noexcept { return labels.empty(); }

  static TrainingView classification(const Dataset& ds);
  static TrainingView reconstruction_of(const Matrix& images);
  /// Appends `repeat` copies of every row of `images`, labeled `label`.
  void append(const Matrix& images, int label, std::size_t repeat);
};

/// Runs cfg.epochs passes of minibatch SGD in place. Each epoch visits the
/// samples in a fresh seeded shuffle; the result depends only on the inputs.
std::vector<EpochStats> fit(MlpModel& model, const TrainingView& data, const TrainConfig& cfg,
                            const EpochCallback& on_epoch = {});

/// Fresh classifier (seeded from cfg.seed) trained on labeled data.
MlpModel train(MlpModel init, const Dataset& train_set, const TrainConfig& cfg,
               const EpochCallback& on_epoch = {});

/// Fresh 784-300-10 classifier trained on the legitimate set plus
/// cfg.trigger_repeat copies of every trigger labeled with the trojan label.
MlpModel inject_trojan(const Dataset& legit, const TriggerSet& triggers, const TrainConfig& cfg,
                       const EpochCallback& on_epoch = {});

/// Continues training an existing model on legitimate data only.
MlpModel retrain(const MlpModel& model, const Dataset& legit_subset, const TrainConfig& cfg,
                 const EpochCallback& on_epoch = {});

}  // namespace ntrojan
