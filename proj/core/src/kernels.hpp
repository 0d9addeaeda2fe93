#pragma once

// Batched forward/backward kernels shared by the public MLP operations and
// the training loop. Internal to the core library.

#include <Eigen/Core>

#include <vector>

#include "ntrojan/mlp.hpp"

namespace ntrojan::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutableMap = Eigen::Map<RowMatrix>;

inline ConstMap view(const Matrix& m) { return ConstMap(m.data().data(), m.rows(), m.cols()); }
inline MutableMap view(Matrix& m) { return MutableMap(m.data().data(), m.rows(), m.cols()); }

/// Scratch buffers for one minibatch; reused across batches to avoid churn.
struct Workspace {
  /// acts[0] is the input batch; acts[l + 1] the output of layer l.
  std::vector<RowMatrix> acts;
  RowMatrix delta;
  RowMatrix delta_prev;
  std::vector<RowMatrix> grad_w;
  std::vector<Eigen::RowVectorXd> grad_b;
};

/// Fills ws.acts[1..L] from ws.acts[0].
void forward(const MlpModel& model, Workspace& ws);

/// Gradient of (1/2n) sum ||acts[L] - targets||^2 into ws.grad_w / ws.grad_b.
/// Returns the loss value. Requires a prior forward() on the same batch.
double backward(const MlpModel& model, const RowMatrix& targets, Workspace& ws);

}  // namespace ntrojan::detail
