#include "ntrojan/autoencoder.hpp"

#include <algorithm>
#include <string>

#include "ntrojan/errors.hpp"
#include "ntrojan/rng.hpp"

namespace ntrojan {

void AutoencoderConfig::validate() const {
  for (std::size_t w : hidden_sizes) {
    if (w == 0) throw ContractError("autoencoder layer width must be positive");
  }
  if (!(hidden_sizes[1] < hidden_sizes[0] && hidden_sizes[1] < hidden_sizes[2] && hidden_sizes[1] < kImagePixels)) {
    throw ContractError("autoencoder middle layer must be the narrowest (bottleneck)");
  }
  training.validate();
}

MlpModel make_autoencoder(const AutoencoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const LayerSpec specs[] = {{cfg.hidden_sizes[0], cfg.activations[0]},
                             {cfg.hidden_sizes[1], cfg.activations[1]},
                             {cfg.hidden_sizes[2], cfg.activations[2]},
                             {kImagePixels, cfg.activations[3]}};
  return MlpModel::initialize(kImagePixels, specs, seed);
}

double ae_loss(const MlpModel& ae, const Matrix& batch) {
  if (batch.rows() == 0) throw SizeError("empty batch");
  if (ae.output_dim() != ae.input_dim()) throw ShapeError("autoencoder output width differs from input width");
  return mse_loss(ae, batch, batch);
}

MlpModel train_autoencoder(const Dataset& legit, const AutoencoderConfig& cfg, const EpochCallback& on_epoch) {
  MlpModel ae = make_autoencoder(cfg, derive_seed(cfg.training.seed, "init"));
  fit(ae, TrainingView::reconstruction_of(legit.images), cfg.training, on_epoch);
  return ae;
}

std::vector<double> reconstruct(const MlpModel& ae, std::span<const double> x) {
  auto out = ae.forward(x);
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Matrix reconstruct_batch(const MlpModel& ae, const Matrix& inputs) {
  Matrix out(inputs.rows(), ae.output_dim());
  constexpr std::size_t kChunk = 1024;
  for (std::size_t start = 0; start < inputs.rows(); start += kChunk) {
    const std::size_t end = std::min(inputs.rows(), start + kChunk);
    std::vector<std::size_t> idx(end - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    const Matrix chunk = ae.forward_batch(inputs.gather_rows(idx));
    for (std::size_t r = 0; r < chunk.rows(); ++r) {
      auto dst = out.row(start + r);
      auto src = chunk.row(r);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = std::clamp(src[c], 0.0, 1.0);
    }
  }
  return out;
}

int BlackBoxClassifier::predict(std::span<const double> x) const { return argmax(query(x)); }

std::vector<int> BlackBoxClassifier::predict_batch(const Matrix& inputs) const {
  return ntrojan::predict_batch(*model_, inputs);
}

int defended_predict(const MlpModel& ae, const BlackBoxClassifier& ip, std::span<const double> x) {
  if (ae.output_dim() != ip.input_dim()) throw ShapeError("autoencoder output does not feed the classifier");
  return ip.predict(reconstruct(ae, x));
}

std::vector<int> defended_predict_batch(const MlpModel& ae, const BlackBoxClassifier& ip, const Matrix& inputs) {
  if (ae.output_dim() != ip.input_dim()) throw ShapeError("autoencoder output does not feed the classifier");
  return ip.predict_batch(reconstruct_batch(ae, inputs));
}

double mean_reconstruction_error(const MlpModel& ae, const Matrix& inputs) {
  if (inputs.rows() == 0) throw SizeError("no inputs");
  const Matrix rec = reconstruct_batch(ae, inputs);
  double sum = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double d = rec.data()[i] - inputs.data()[i];
    sum += d * d;
  }
  return sum / (static_cast<double>(inputs.rows()) * static_cast<double>(inputs.cols()));
}

}  // namespace ntrojan
