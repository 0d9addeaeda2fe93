#include "ntrojan/dataset.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ntrojan/errors.hpp"
#include "ntrojan/rng.hpp"

namespace ntrojan {

namespace {

void check_pixels(const Matrix& images, const char* what) {
  if (images.cols() != kImagePixels) {
    throw ContractError(std::string(what) + " rows have " + std::to_string(images.cols()) +
                        " pixels, expected 784");
  }
  for (double v : images.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError(std::string(what) + " pixel outside [0,1]");
  }
}

}  // namespace

void Dataset::validate() const {
  check_pixels(images, "dataset");
  if (labels) {
    if (labels->size() != images.rows()) throw ContractError("label count differs from image count");
    for (int l : *labels) {
      if (l < 0 || l >= kNumClasses) throw ContractError("label " + std::to_string(l) + " outside 0..9");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.images = images.gather_rows(indices);
  if (labels) {
    std::vector<int> sub;
    sub.reserve(indices.size());
    for (std::size_t i : indices) sub.push_back((*labels)[i]);
    out.labels = std::move(sub);
  }
  return out;
}

void TriggerSet::validate() const {
  if (trojan_label < 0 || trojan_label >= kNumClasses) {
    throw ContractError("trojan label " + std::to_string(trojan_label) + " outside 0..9");
  }
  if (images.rows() == 0) throw SizeError("trigger set is empty");
  check_pixels(images, "trigger set");
}

TriggerSet TriggerSet::subset(std::span<const std::size_t> indices) const {
  return TriggerSet{images.gather_rows(indices), trojan_label};
}

Dataset make_dataset(Matrix images, std::vector<int> labels) {
  if (images.rows() != labels.size()) {
    throw PairingError(std::to_string(images.rows()) + " images but " + std::to_string(labels.size()) +
                       " labels");
  }
  return Dataset{std::move(images), std::move(labels)};
}

Dataset sample_subset(const Dataset& ds, std::size_t n, std::uint64_t seed) {
  if (n == 0 || n > ds.size()) {
    throw SizeError("cannot draw " + std::to_string(n) + " of " + std::to_string(ds.size()) + " samples");
  }
  Rng rng(seed);
  auto perm = rng.permutation(ds.size());
  perm.resize(n);
  return ds.subset(perm);
}

std::pair<TriggerSet, TriggerSet> split_triggers(const TriggerSet& triggers, double test_fraction,
                                                 std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw RangeError("test fraction must be in (0,1)");
  const std::size_t m = triggers.size();
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(m) * test_fraction));
  if (n_test == 0 || n_test >= m) throw SizeError("trigger split leaves an empty side");
  Rng rng(seed);
  auto perm = rng.permutation(m);
  std::span<const std::size_t> all(perm);
  return {triggers.subset(all.subspan(n_test)), triggers.subset(all.first(n_test))};
}

}  // namespace ntrojan
