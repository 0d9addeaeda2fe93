#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace ntrojan {

/// xoshiro256++ seeded through splitmix64. Bit-reproducible on every
/// platform; single owner, never shared across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit();
  /// Uniform double in [lo, hi). Throws RangeError unless lo < hi.
  double uniform(double lo, double hi);
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Fisher-Yates shuffle driven by this generator.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Identity permutation of [0, n) shuffled.
  std::vector<std::size_t> permutation(std::size_t n);

  const std::array<std::uint64_t, 4>& state() const noexcept { return s_; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Per-stage seed: a stable hash of (master, stage name, index).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index = 0);

}  // namespace ntrojan
