#include <algorithm>
#include <cmath>
#include <string>

#include "ntrojan/anomaly.hpp"
#include "ntrojan/errors.hpp"
#include "ntrojan/rng.hpp"

namespace ntrojan {

double LinearSvm::score(std::span<const double> x) const {
  if (x.size() != weights.size()) throw ShapeError("svm input has " + std::to_string(x.size()) + " features");
  double s = bias;
  for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
  return s;
}

double LinearSvm::norm() const {
  double sq = bias * bias;
  for (double w : weights) sq += w * w;
  return std::sqrt(sq);
}

LinearSvm svm_train(const Matrix& features, std::span<const std::uint8_t> targets, double lambda,
                    std::size_t steps, std::uint64_t seed) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (targets.size() != n) throw ShapeError("svm target count differs from sample count");
  if (!(lambda > 0.0)) throw RangeError("svm lambda must be positive");
  std::size_t n_pos = 0;
  for (auto t : targets) n_pos += t ? 1 : 0;
  if (n_pos == 0 || n_pos == n) throw DegenerateDataError("svm training data has a single polarity");

  // w = scale * v, with v[d] holding the bias (constant-1 feature).
  std::vector<double> v(d + 1, 0.0);
  double scale = 1.0;
  double norm_sq = 0.0;
  const double radius_sq = 1.0 / lambda;
  Rng rng(seed);

  for (std::size_t t = 1; t <= steps; ++t) {
    const std::size_t i = static_cast<std::size_t>(rng.below(n));
    const auto x = features.row(i);
    const double y = targets[i] ? 1.0 : -1.0;
    double dot = v[d];
    for (std::size_t j = 0; j < d; ++j) dot += v[j] * x[j];
    dot *= scale;
    const bool violated = y * dot < 1.0;
    const double eta = 1.0 / (lambda * static_cast<double>(t));

    // Shrink: w <- (1 - eta * lambda) w = (1 - 1/t) w.
    const double shrink = 1.0 - 1.0 / static_cast<double>(t);
    if (shrink == 0.0) {
      std::fill(v.begin(), v.end(), 0.0);
      scale = 1.0;
    } else {
      scale *= shrink;
    }
    norm_sq *= shrink * shrink;
    dot *= shrink;

    if (violated) {
      // w <- w + eta * y * x_aug
      const double a = eta * y;
      double x_sq = 1.0;
      for (std::size_t j = 0; j < d; ++j) x_sq += x[j] * x[j];
      norm_sq += 2.0 * a * dot + a * a * x_sq;
      const double step = a / scale;
      for (std::size_t j = 0; j < d; ++j) v[j] += step * x[j];
      v[d] += step;
    }
    // Project onto the ball of radius 1/sqrt(lambda).
    if (norm_sq > radius_sq) {
      const double f = std::sqrt(radius_sq / norm_sq);
      scale *= f;
      norm_sq = radius_sq;
    }
    // Resync the tracked norm with the true one to stop rounding drift.
    if (t % 4096 == 0) {
      double sq = 0.0;
      for (double e : v) sq += e * e;
      norm_sq = sq * scale * scale;
    }
    // Keep the scale factor away from underflow.
    if (scale < 1e-100) {
      for (double& e : v) e *= scale;
      scale = 1.0;
    }
  }

  LinearSvm svm;
  svm.weights.resize(d);
  for (std::size_t j = 0; j < d; ++j) svm.weights[j] = scale * v[j];
  svm.bias = scale * v[d];
  svm.lambda = lambda;
  svm.steps = steps;
  return svm;
}

LinearSvm svm_train(const Dataset& data, int positive_class, double lambda, std::size_t steps, std::uint64_t seed) {
  if (!data.labeled()) throw ContractError("svm training data must be labeled");
  std::vector<std::uint8_t> targets(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) targets[i] = (*data.labels)[i] == positive_class ? 1 : 0;
  return svm_train(data.images, targets, lambda, steps, seed);
}

}  // namespace ntrojan
