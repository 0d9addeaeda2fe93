#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ntrojan/dataset.hpp"
#include "ntrojan/mlp.hpp"
#include "ntrojan/train.hpp"

namespace ntrojan {

/// Bottlenecked replicator network settings. The middle hidden layer must be
/// the narrowest; input and output are both 784 wide.
struct AutoencoderConfig {
  std::array<std::size_t, 3> hidden_sizes{256, 64, 256};
  /// Three hidden activations followed by the output activation.
  std::array<Activation, 4> activations{Activation::kRelu, Activation::kSigmoid, Activation::kRelu,
                                        Activation::kRelu};
  TrainConfig training{.learning_rate = 0.05, .epochs = 10, .batch_size = 32, .seed = 0, .trigger_repeat = 1};

  void validate() const;
};

/// Untrained 784-h1-h2-h3-784 network.
MlpModel make_autoencoder(const AutoencoderConfig& cfg, std::uint64_t seed);

/// (1/2n) sum_i ||f(x_i) - x_i||^2 over the rows of `batch`.
double ae_loss(const MlpModel& ae, const Matrix& batch);

/// Trains on legitimate images only; labels are ignored.
MlpModel train_autoencoder(const Dataset& legit, const AutoencoderConfig& cfg,
                           const EpochCallback& on_epoch = {});

/// Autoencoder output for x, clipped to [0,1].
std::vector<double> reconstruct(const MlpModel& ae, std::span<const double> x);
Matrix reconstruct_batch(const MlpModel& ae, const Matrix& inputs);

/// Opaque classifier handle: exposes only query access, never weights.
class BlackBoxClassifier {
 public:
  explicit BlackBoxClassifier(const MlpModel& model) : model_(&model) {}

  std::size_t input_dim() const noexcept { return model_->input_dim(); }
  std::vector<double> query(std::span<const double> x) const { return model_->forward(x); }
  int predict(std::span<const double> x) const;
  std::vector<int> predict_batch(const Matrix& inputs) const;

 private:
  const MlpModel* model_;
};

/// Class the IP assigns to the reconstruction of x.
int defended_predict(const MlpModel& ae, const BlackBoxClassifier& ip, std::span<const double> x);
std::vector<int> defended_predict_batch(const MlpModel& ae, const BlackBoxClassifier& ip, const Matrix& inputs);

/// Mean over rows of ||reconstruct(x) - x||^2 / 784.
double mean_reconstruction_error(const MlpModel& ae, const Matrix& inputs);

}  // namespace ntrojan
