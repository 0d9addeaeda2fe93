#pragma once

#include <span>
#include <string_view>

#include "ntrojan/matrix.hpp"

namespace ntrojan {

/// Elementwise nonlinearity of a dense layer. The numeric values are the
/// on-disk tag bytes of the model format.
enum class Activation : unsigned char {
  kSigmoid = 0,
  kRelu = 1,
  kIdentity = 2,
};

std::string_view to_string(Activation kind);
/// Parses "sigmoid" | "relu" | "identity"; throws RangeError otherwise.
Activation activation_from_string(std::string_view name);

double activate(Activation kind, double x);
/// Derivative at pre-activation x. relu'(0) is taken as 0.
double activate_derivative(Activation kind, double x);

Matrix activate(Activation kind, const Matrix& v);
Matrix activate_derivative(Activation kind, const Matrix& v);

/// In-place variants used by the training kernels.
void activate_inplace(Activation kind, std::span<double> v);

/// Derivative expressed through the activation output y = f(x). Valid for all
/// three kinds because each derivative is a function of the output alone
/// (relu uses y > 0, which matches relu'(0) = 0).
double derivative_from_output(Activation kind, double y);

}  // namespace ntrojan
