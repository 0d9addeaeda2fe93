#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ntrojan/matrix.hpp"

namespace ntrojan {

inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kImagePixels = kImageSide * kImageSide;
inline constexpr int kNumClasses = 10;

/// N images of 784 pixels in [0,1], optionally labeled with digits 0..9.
struct Dataset {
  Matrix images;
  std::optional<std::vector<int>> labels;

  std::size_t size() const noexcept { return images.rows(); }
  bool labeled() const noexcept { return labels.has_value(); }

  /// Throws ContractError when pixel range, width or labels are invalid.
  void validate() const;

  /// Rows selected by index; labels follow.
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Malicious trigger images and the class the backdoor should emit for them.
struct TriggerSet {
  Matrix images;
  int trojan_label = 0;

  std::size_t size() const noexcept { return images.rows(); }
  void validate() const;
  TriggerSet subset(std::span<const std::size_t> indices) const;
};

/// Pairs an image matrix with a label array. Throws PairingError on count mismatch.
Dataset make_dataset(Matrix images, std::vector<int> labels);

/// n rows drawn without replacement by a seeded shuffle. Requires 1 <= n <= N.
Dataset sample_subset(const Dataset& ds, std::size_t n, std::uint64_t seed);

/// Seeded shuffle split into (train, test); test gets round(M * test_fraction) rows.
std::pair<TriggerSet, TriggerSet> split_triggers(const TriggerSet& triggers, double test_fraction,
                                                 std::uint64_t seed);

}  // namespace ntrojan
