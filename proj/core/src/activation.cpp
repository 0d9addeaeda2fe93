#include "ntrojan/activation.hpp"

#include <cmath>
#include <string>

#include "ntrojan/errors.hpp"

namespace ntrojan {

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw RangeError("unknown activation '" + std::string(name) + "'");
}

namespace {

double sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::kSigmoid: return sigmoid(x);
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kIdentity: return x;
  }
  return x;
}

double activate_derivative(Activation kind, double x) {
  switch (kind) {
    case Activation::kSigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case Activation::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

double derivative_from_output(Activation kind, double y) {
  switch (kind) {
    case Activation::kSigmoid: return y * (1.0 - y);
    case Activation::kRelu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

Matrix activate(Activation kind, const Matrix& v) {
  Matrix out = v;
  activate_inplace(kind, out.data());
  return out;
}

Matrix activate_derivative(Activation kind, const Matrix& v) {
  Matrix out = v;
  for (double& x : out.data()) x = activate_derivative(kind, x);
  return out;
}

void activate_inplace(Activation kind, std::span<double> v) {
  switch (kind) {
    case Activation::kSigmoid:
      for (double& x : v) x = sigmoid(x);
      break;
    case Activation::kRelu:
      for (double& x : v) x = x > 0.0 ? x : 0.0;
      break;
    case Activation::kIdentity:
      break;
  }
}

}  // namespace ntrojan
