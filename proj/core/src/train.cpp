#include "ntrojan/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kernels.hpp"
#include "ntrojan/errors.hpp"
#include "ntrojan/rng.hpp"

namespace ntrojan {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ContractError("learning rate must be positive");
  if (batch_size == 0) throw ContractError("batch size must be at least 1");
  if (trigger_repeat == 0) throw ContractError("trigger repeat must be at least 1");
}

TrainingView TrainingView::classification(const Dataset& ds) {
  if (!ds.labeled()) throw ContractError("training data must be labeled");
  TrainingView view;
  view.width = ds.images.cols();
  view.inputs.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) view.inputs.push_back(ds.images.row(i).data());
  view.labels = *ds.labels;
  return view;
}

TrainingView TrainingView::reconstruction_of(const Matrix& images) {
  TrainingView view;
  view.width = images.cols();
  view.inputs.reserve(images.rows());
  for (std::size_t i = 0; i < images.rows(); ++i) view.inputs.push_back(images.row(i).data());
  return view;
}

void TrainingView::append(const Matrix& images, int label, std::size_t repeat) {
  if (images.cols() != width) throw ShapeError("appended rows have a different width");
  if (reconstruction()) throw ContractError("cannot append labeled rows to a reconstruction view");
  for (std::size_t r = 0; r < repeat; ++r) {
    for (std::size_t i = 0; i < images.rows(); ++i) {
      inputs.push_back(images.row(i).data());
      labels.push_back(label);
    }
  }
}

std::vector<EpochStats> fit(MlpModel& model, const TrainingView& data, const TrainConfig& cfg,
                            const EpochCallback& on_epoch) {
  cfg.validate();
  std::vector<EpochStats> history;
  if (cfg.epochs == 0) return history;
  if (data.size() == 0) throw SizeError("no training samples");
  if (data.width != model.input_dim()) throw ShapeError("training inputs do not match model input width");
  const std::size_t out_dim = model.output_dim();
  if (data.reconstruction() && out_dim != data.width) {
    throw ShapeError("reconstruction training needs output width equal to input width");
  }
  if (!data.reconstruction() && out_dim != static_cast<std::size_t>(kNumClasses)) {
    throw ShapeError("classification training needs 10 outputs");
  }

  Rng rng(cfg.seed);
  detail::Workspace ws;
  ws.acts.resize(1);
  detail::RowMatrix targets;
  const auto width = static_cast<Eigen::Index>(data.width);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = rng.permutation(data.size());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const auto rows = static_cast<Eigen::Index>(end - start);
      auto& input = ws.acts[0];
      input.resize(rows, width);
      for (Eigen::Index r = 0; r < rows; ++r) {
        input.row(r) = Eigen::Map<const Eigen::RowVectorXd>(data.inputs[order[start + r]], width);
      }
      if (data.reconstruction()) {
        targets = input;
      } else {
        targets.setZero(rows, static_cast<Eigen::Index>(out_dim));
        for (Eigen::Index r = 0; r < rows; ++r) targets(r, data.labels[order[start + r]]) = 1.0;
      }

      detail::forward(model, ws);
      loss_sum += detail::backward(model, targets, ws);
      ++batches;

      auto& layers = model.mutable_layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        detail::view(layers[l].weights) -= cfg.learning_rate * ws.grad_w[l];
        Eigen::Map<Eigen::RowVectorXd> bias(layers[l].bias.data(), static_cast<Eigen::Index>(layers[l].bias.size()));
        bias -= cfg.learning_rate * ws.grad_b[l];
      }
    }
    if (!model.all_finite()) {
      throw ContractError("training diverged in epoch " + std::to_string(epoch + 1) +
                          " (non-finite weights); lower the learning rate");
    }
    EpochStats stats{epoch + 1, loss_sum / static_cast<double>(batches)};
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

MlpModel train(MlpModel init, const Dataset& train_set, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  const auto view = TrainingView::classification(train_set);
  fit(init, view, cfg, on_epoch);
  return init;
}

MlpModel inject_trojan(const Dataset& legit, const TriggerSet& triggers, const TrainConfig& cfg,
                       const EpochCallback& on_epoch) {
  cfg.validate();
  triggers.validate();
  auto view = TrainingView::classification(legit);
  view.append(triggers.images, triggers.trojan_label, cfg.trigger_repeat);
  MlpModel model = make_classifier(derive_seed(cfg.seed, "init"));
  fit(model, view, cfg, on_epoch);
  return model;
}

MlpModel retrain(const MlpModel& model, const Dataset& legit_subset, const TrainConfig& cfg,
                 const EpochCallback& on_epoch) {
  return train(model, legit_subset, cfg, on_epoch);
}

}  // namespace ntrojan
