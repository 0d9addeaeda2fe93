#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "ntrojan/dataset.hpp"
#include "ntrojan/matrix.hpp"

namespace ntrojan {

// ---------------------------------------------------------------------------
// Linear SVM

/// Linear classifier score(x) = w.x + b trained on the hinge loss with an L2
/// penalty (Pegasos). The bias is the weight of an implicit constant-1
/// feature and is regularized with the rest.
struct LinearSvm {
  std::vector<double> weights;
  double bias = 0.0;
  double lambda = 1e-4;
  std::size_t steps = 0;

  double score(std::span<const double> x) const;
  bool positive(std::span<const double> x) const { return score(x) > 0.0; }
  /// Euclidean norm of (weights, bias).
  double norm() const;
};

/// targets[i] selects the positive side. Throws DegenerateDataError unless
/// both sides are present.
LinearSvm svm_train(const Matrix& features, std::span<const std::uint8_t> targets, double lambda,
                    std::size_t steps, std::uint64_t seed);
/// One-vs-rest convenience: label == positive_class is positive.
LinearSvm svm_train(const Dataset& data, int positive_class, double lambda, std::size_t steps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Decision tree

struct TreeNode {
  /// -1 marks a leaf.
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  bool positive = false;
  std::uint32_t depth = 0;
  std::uint32_t n_positive = 0;
  std::uint32_t n_negative = 0;

  bool is_leaf() const noexcept { return feature < 0; }
};

/// Binary CART tree; x[feature] <= threshold goes left. Node 0 is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;
  std::size_t max_depth = 16;
  std::size_t min_leaf = 5;

  bool positive(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;
};

/// Depth limit used by callers that want an unbounded tree.
inline constexpr std::size_t kUnboundedDepth = 1u << 20;

/// Greedy Gini splits on midpoints between consecutive distinct feature
/// values. A split is admissible only if both children keep >= min_leaf
/// samples; growth stops at purity, max_depth, or when no admissible split
/// lowers impurity.
DecisionTree dt_train(const Matrix& features, std::span<const std::uint8_t> targets, std::size_t max_depth,
                      std::size_t min_leaf);
DecisionTree dt_train(const Dataset& data, int positive_class, std::size_t max_depth, std::size_t min_leaf);

/// Gini impurity 1 - p^2 - (1-p)^2 of a node with the given counts.
double gini(double positives, double negatives);

// ---------------------------------------------------------------------------
// One-vs-rest gate

enum class GateBackend : std::uint8_t { kSvm = 0x02, kDecisionTree = 0x03 };

std::string_view to_string(GateBackend backend);
/// Parses "svm" | "dt".
GateBackend gate_backend_from_string(std::string_view name);

struct GateConfig {
  double svm_lambda = 1e-4;
  std::size_t svm_steps = 100000;
  std::size_t dt_max_depth = 16;
  std::size_t dt_min_leaf = 5;
  /// Negatives per positive kept for each detector; 0 keeps every negative.
  double negative_ratio = 8.0;
  std::uint64_t seed = 0;
  /// Detectors trained concurrently.
  std::size_t jobs = 1;

  void validate() const;
};

enum class Verdict { kLegitimate, kAnomaly };

/// Ten per-class detectors; detector i was trained with class i positive.
struct AnomalyGate {
  GateBackend backend = GateBackend::kDecisionTree;
  std::variant<std::vector<LinearSvm>, std::vector<DecisionTree>> detectors;
  /// Training bookkeeping per detector.
  std::array<std::size_t, kNumClasses> positive_counts{};
  std::array<std::size_t, kNumClasses> negative_counts{};

  std::size_t detector_count() const;
  std::array<bool, kNumClasses> votes(std::span<const double> x) const;
};

/// Throws CoverageError unless every class 0..9 appears in data.
AnomalyGate train_gate(const Dataset& data, GateBackend backend, const GateConfig& cfg);

/// Legitimate iff at least one detector votes positive.
Verdict gate_classify(const AnomalyGate& gate, std::span<const double> x);
std::vector<Verdict> gate_classify_batch(const AnomalyGate& gate, const Matrix& inputs);

/// "NTIP" + backend tag byte, then the detector payload.
std::vector<std::uint8_t> serialize_gate(const AnomalyGate& gate);
AnomalyGate deserialize_gate(std::span<const std::uint8_t> bytes);
void save_gate(const AnomalyGate& gate, const std::filesystem::path& path);
AnomalyGate load_gate(const std::filesystem::path& path);

}  // namespace ntrojan
