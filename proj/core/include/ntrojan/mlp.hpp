#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ntrojan/activation.hpp"
#include "ntrojan/matrix.hpp"

namespace ntrojan {

/// Fully connected layer computing f(x W + b); weights are fan_in x fan_out.
struct DenseLayer {
  Matrix weights;
  std::vector<double> bias;
  Activation activation = Activation::kSigmoid;

  std::size_t fan_in() const noexcept { return weights.rows(); }
  std::size_t fan_out() const noexcept { return weights.cols(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Width and nonlinearity of one layer, used to build fresh networks.
struct LayerSpec {
  std::size_t width;
  Activation activation;
};

/// Layered dense network. Used both for the classifier and the autoencoder.
class MlpModel {
 public:
  MlpModel() = default;
  /// Throws ShapeError unless layer dimensions chain from input_dim.
  MlpModel(std::size_t input_dim, std::vector<DenseLayer> layers);

  /// Weights ~ U(-r, r), r = sqrt(6 / (fan_in + fan_out)); biases zero.
  static MlpModel initialize(std::size_t input_dim, std::span<const LayerSpec> layers, std::uint64_t seed);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept;
  std::size_t parameter_count() const noexcept;

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& mutable_layers() noexcept { return layers_; }

  /// Output for a single input vector.
  std::vector<double> forward(std::span<const double> x) const;
  /// Row-wise forward pass over a batch (one input per row).
  Matrix forward_batch(const Matrix& inputs) const;

  bool all_finite() const noexcept;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::size_t input_dim_ = 0;
  std::vector<DenseLayer> layers_;
};

/// 784-300-10 classifier with sigmoid hidden and output layers.
MlpModel make_classifier(std::uint64_t seed);

/// Index of the largest entry; ties resolve to the lowest index.
int argmax(std::span<const double> outputs);

/// Class decision for one image.
int predict(const MlpModel& model, std::span<const double> x);
/// Class decision for every row of `inputs`.
std::vector<int> predict_batch(const MlpModel& model, const Matrix& inputs);

/// Per-layer gradients, shape-congruent with the model they came from.
struct Gradient {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

/// 10-wide one-hot rows for the given labels.
Matrix one_hot(std::span<const int> labels);

/// (1/2n) sum_i ||f(x_i) - y_i||^2 over the rows of inputs/targets.
double mse_loss(const MlpModel& model, const Matrix& inputs, const Matrix& targets);

/// Exact gradient of mse_loss with respect to every weight and bias.
Gradient backprop(const MlpModel& model, const Matrix& inputs, const Matrix& targets);

/// w <- w - rate * g for every weight and bias.
MlpModel sgd_step(const MlpModel& model, const Gradient& g, double rate);
void sgd_step_inplace(MlpModel& model, const Gradient& g, double rate);

}  // namespace ntrojan
