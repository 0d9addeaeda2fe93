#include "ntrojan/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kernels.hpp"
#include "ntrojan/dataset.hpp"
#include "ntrojan/errors.hpp"
#include "ntrojan/rng.hpp"

namespace ntrojan {

namespace detail {

void forward(const MlpModel& model, Workspace& ws) {
  const auto& layers = model.layers();
  ws.acts.resize(layers.size() + 1);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    auto& out = ws.acts[l + 1];
    out.noalias() = ws.acts[l] * view(layer.weights);
    const Eigen::Map<const Eigen::RowVectorXd> bias(layer.bias.data(), static_cast<Eigen::Index>(layer.bias.size()));
    out.rowwise() += bias;
    activate_inplace(layer.activation, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  }
}

namespace {

void scale_by_derivative(Activation kind, const RowMatrix& output, RowMatrix& delta) {
  switch (kind) {
    case Activation::kSigmoid:
      delta.array() *= output.array() * (1.0 - output.array());
      break;
    case Activation::kRelu:
      delta.array() *= (output.array() > 0.0).cast<double>();
      break;
    case Activation::kIdentity:
      break;
  }
}

}  // namespace

double backward(const MlpModel& model, const RowMatrix& targets, Workspace& ws) {
  const auto& layers = model.layers();
  const std::size_t n_layers = layers.size();
  const auto n = static_cast<double>(targets.rows());
  ws.grad_w.resize(n_layers);
  ws.grad_b.resize(n_layers);

  ws.delta = ws.acts[n_layers] - targets;
  const double loss = ws.delta.squaredNorm() / (2.0 * n);
  ws.delta /= n;
  for (std::size_t l = n_layers; l-- > 0;) {
    scale_by_derivative(layers[l].activation, ws.acts[l + 1], ws.delta);
    ws.grad_w[l].noalias() = ws.acts[l].transpose() * ws.delta;
    ws.grad_b[l] = ws.delta.colwise().sum();
    if (l > 0) {
      ws.delta_prev.noalias() = ws.delta * view(layers[l].weights).transpose();
      std::swap(ws.delta, ws.delta_prev);
    }
  }
  return loss;
}

}  // namespace detail

MlpModel::MlpModel(std::size_t input_dim, std::vector<DenseLayer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  std::size_t width = input_dim_;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.fan_in() != width) {
      throw ShapeError("layer " + std::to_string(l) + " expects " + std::to_string(layer.fan_in()) +
                       " inputs but receives " + std::to_string(width));
    }
    if (layer.bias.size() != layer.fan_out()) {
      throw ShapeError("layer " + std::to_string(l) + " bias length " + std::to_string(layer.bias.size()));
    }
    width = layer.fan_out();
  }
}

MlpModel MlpModel::initialize(std::size_t input_dim, std::span<const LayerSpec> specs, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  std::size_t fan_in = input_dim;
  for (const auto& spec : specs) {
    DenseLayer layer{Matrix(fan_in, spec.width), std::vector<double>(spec.width, 0.0), spec.activation};
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + spec.width));
    for (double& w : layer.weights.data()) w = rng.uniform(-r, r);
    layers.push_back(std::move(layer));
    fan_in = spec.width;
  }
  return MlpModel(input_dim, std::move(layers));
}

std::size_t MlpModel::output_dim() const noexcept {
  return layers_.empty() ? input_dim_ : layers_.back().fan_out();
}

std::size_t MlpModel::parameter_count() const noexcept {
  std::size_t count = 0;
  for (const auto& l : layers_) count += l.weights.size() + l.bias.size();
  return count;
}

std::vector<double> MlpModel::forward(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    throw ShapeError("input of length " + std::to_string(x.size()) + ", model expects " + std::to_string(input_dim_));
  }
  Matrix out = forward_batch(Matrix::row_vector(x));
  return {out.data().begin(), out.data().end()};
}

Matrix MlpModel::forward_batch(const Matrix& inputs) const {
  if (inputs.cols() != input_dim_) {
    throw ShapeError("inputs of width " + std::to_string(inputs.cols()) + ", model expects " +
                     std::to_string(input_dim_));
  }
  detail::Workspace ws;
  ws.acts.resize(1);
  ws.acts[0] = detail::view(inputs);
  detail::forward(*this, ws);
  const auto& out = ws.acts.back();
  return Matrix(static_cast<std::size_t>(out.rows()), static_cast<std::size_t>(out.cols()),
                std::vector<double>(out.data(), out.data() + out.size()));
}

bool MlpModel::all_finite() const noexcept {
  return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
    return l.weights.all_finite() &&
           std::all_of(l.bias.begin(), l.bias.end(), [](double v) { return std::isfinite(v); });
  });
}

MlpModel make_classifier(std::uint64_t seed) {
  const LayerSpec specs[] = {{300, Activation::kSigmoid}, {10, Activation::kSigmoid}};
  return MlpModel::initialize(784, specs, seed);
}

int argmax(std::span<const double> outputs) {
  if (outputs.empty()) throw SizeError("argmax of empty output");
  // max_element returns the first maximum, which is the lowest-index tie rule.
  return static_cast<int>(std::max_element(outputs.begin(), outputs.end()) - outputs.begin());
}

int predict(const MlpModel& model, std::span<const double> x) { return argmax(model.forward(x)); }

std::vector<int> predict_batch(const MlpModel& model, const Matrix& inputs) {
  std::vector<int> out;
  out.reserve(inputs.rows());
  // Chunked so very large sets do not materialize every activation at once.
  constexpr std::size_t kChunk = 1024;
  for (std::size_t start = 0; start < inputs.rows(); start += kChunk) {
    const std::size_t end = std::min(inputs.rows(), start + kChunk);
    std::vector<std::size_t> idx(end - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    const Matrix outputs = model.forward_batch(inputs.gather_rows(idx));
    for (std::size_t r = 0; r < outputs.rows(); ++r) out.push_back(argmax(outputs.row(r)));
  }
  return out;
}

Matrix one_hot(std::span<const int> labels) {
  Matrix out(labels.size(), static_cast<std::size_t>(kNumClasses));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= kNumClasses) throw RangeError("label " + std::to_string(labels[i]));
    out(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return out;
}

namespace {

void check_batch(const MlpModel& model, const Matrix& inputs, const Matrix& targets) {
  if (inputs.rows() == 0) throw SizeError("empty batch");
  if (inputs.rows() != targets.rows()) throw ShapeError("input and target row counts differ");
  if (inputs.cols() != model.input_dim()) throw ShapeError("input width does not match model");
  if (targets.cols() != model.output_dim()) throw ShapeError("target width does not match model output");
}

}  // namespace

double mse_loss(const MlpModel& model, const Matrix& inputs, const Matrix& targets) {
  check_batch(model, inputs, targets);
  const Matrix out = model.forward_batch(inputs);
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out.data()[i] - targets.data()[i];
    sum += d * d;
  }
  return sum / (2.0 * static_cast<double>(inputs.rows()));
}

Gradient backprop(const MlpModel& model, const Matrix& inputs, const Matrix& targets) {
  check_batch(model, inputs, targets);
  detail::Workspace ws;
  ws.acts.resize(1);
  ws.acts[0] = detail::view(inputs);
  detail::forward(model, ws);
  detail::backward(model, detail::view(targets), ws);

  Gradient g;
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const auto& gw = ws.grad_w[l];
    g.weights.emplace_back(static_cast<std::size_t>(gw.rows()), static_cast<std::size_t>(gw.cols()),
                           std::vector<double>(gw.data(), gw.data() + gw.size()));
    const auto& gb = ws.grad_b[l];
    g.biases.emplace_back(gb.data(), gb.data() + gb.size());
  }
  return g;
}

void sgd_step_inplace(MlpModel& model, const Gradient& g, double rate) {
  auto& layers = model.mutable_layers();
  if (g.weights.size() != layers.size() || g.biases.size() != layers.size()) {
    throw ShapeError("gradient layer count does not match model");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& layer = layers[l];
    if (g.weights[l].rows() != layer.fan_in() || g.weights[l].cols() != layer.fan_out() ||
        g.biases[l].size() != layer.fan_out()) {
      throw ShapeError("gradient for layer " + std::to_string(l) + " has the wrong shape");
    }
    auto w = layer.weights.data();
    auto gw = g.weights[l].data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= rate * gw[i];
    for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= rate * g.biases[l][i];
  }
}

MlpModel sgd_step(const MlpModel& model, const Gradient& g, double rate) {
  MlpModel out = model;
  sgd_step_inplace(out, g, rate);
  return out;
}

}  // namespace ntrojan
