#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "byte_io.hpp"
#include "ntrojan/anomaly.hpp"
#include "ntrojan/errors.hpp"
#include "ntrojan/model_io.hpp"
#include "ntrojan/rng.hpp"

namespace ntrojan {

std::string_view to_string(GateBackend backend) {
  return backend == GateBackend::kSvm ? "svm" : "dt";
}

GateBackend gate_backend_from_string(std::string_view name) {
  if (name == "svm") return GateBackend::kSvm;
  if (name == "dt") return GateBackend::kDecisionTree;
  throw RangeError("unknown gate backend '" + std::string(name) + "' (expected svm or dt)");
}

void GateConfig::validate() const {
  if (!(svm_lambda > 0.0)) throw ContractError("svm lambda must be positive");
  if (svm_steps == 0) throw ContractError("svm steps must be positive");
  if (dt_min_leaf == 0) throw ContractError("tree min_leaf must be positive");
  if (negative_ratio < 0.0) throw ContractError("negative ratio must be non-negative");
}

std::size_t AnomalyGate::detector_count() const {
  return std::visit([](const auto& v) { return v.size(); }, detectors);
}

std::array<bool, kNumClasses> AnomalyGate::votes(std::span<const double> x) const {
  std::array<bool, kNumClasses> out{};
  std::visit(
      [&](const auto& dets) {
        if (dets.size() != out.size()) throw ContractError("gate must hold exactly 10 detectors");
        for (std::size_t i = 0; i < dets.size(); ++i) out[i] = dets[i].positive(x);
      },
      detectors);
  return out;
}

namespace {

// Positives of class k plus a seeded draw of negatives, in ascending index order.
std::vector<std::size_t> detector_rows(const std::vector<int>& labels, int k, double ratio, std::uint64_t seed,
                                       std::size_t& n_pos, std::size_t& n_neg) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == k ? pos : neg).push_back(i);
  if (ratio > 0.0) {
    const auto keep = std::min(neg.size(), static_cast<std::size_t>(ratio * static_cast<double>(pos.size())));
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(neg));
    neg.resize(keep);
  }
  n_pos = pos.size();
  n_neg = neg.size();
  std::vector<std::size_t> rows = std::move(pos);
  rows.insert(rows.end(), neg.begin(), neg.end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

AnomalyGate train_gate(const Dataset& data, GateBackend backend, const GateConfig& cfg) {
  cfg.validate();
  if (!data.labeled()) throw ContractError("gate training data must be labeled");
  std::array<std::size_t, kNumClasses> seen{};
  for (int l : *data.labels) {
    if (l < 0 || l >= kNumClasses) throw ContractError("label outside 0..9");
    ++seen[static_cast<std::size_t>(l)];
  }
  for (int k = 0; k < kNumClasses; ++k) {
    if (seen[static_cast<std::size_t>(k)] == 0) throw CoverageError("no training samples of class " + std::to_string(k));
  }

  AnomalyGate gate;
  gate.backend = backend;
  std::vector<LinearSvm> svms(kNumClasses);
  std::vector<DecisionTree> trees(kNumClasses);

  auto train_one = [&](int k) {
    const auto ku = static_cast<std::size_t>(k);
    const auto rows = detector_rows(*data.labels, k, cfg.negative_ratio, derive_seed(cfg.seed, "gate-negatives", ku),
                                    gate.positive_counts[ku], gate.negative_counts[ku]);
    const Matrix features = data.images.gather_rows(rows);
    std::vector<std::uint8_t> targets(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) targets[i] = (*data.labels)[rows[i]] == k ? 1 : 0;
    if (backend == GateBackend::kSvm) {
      svms[ku] = svm_train(features, targets, cfg.svm_lambda, cfg.svm_steps, derive_seed(cfg.seed, "gate-svm", ku));
    } else {
      trees[ku] = dt_train(features, targets, cfg.dt_max_depth, cfg.dt_min_leaf);
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(cfg.jobs, 1, kNumClasses);
  if (jobs == 1) {
    for (int k = 0; k < kNumClasses; ++k) train_one(k);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (int k = next++; k < kNumClasses; k = next++) {
          try {
            train_one(k);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    workers.clear();
    if (failure) std::rethrow_exception(failure);
  }

  if (backend == GateBackend::kSvm) {
    gate.detectors = std::move(svms);
  } else {
    gate.detectors = std::move(trees);
  }
  return gate;
}

Verdict gate_classify(const AnomalyGate& gate, std::span<const double> x) {
  const auto v = gate.votes(x);
  return std::any_of(v.begin(), v.end(), [](bool b) { return b; }) ? Verdict::kLegitimate : Verdict::kAnomaly;
}

std::vector<Verdict> gate_classify_batch(const AnomalyGate& gate, const Matrix& inputs) {
  std::vector<Verdict> out;
  out.reserve(inputs.rows());
  for (std::size_t i = 0; i < inputs.rows(); ++i) out.push_back(gate_classify(gate, inputs.row(i)));
  return out;
}

std::vector<std::uint8_t> serialize_gate(const AnomalyGate& gate) {
  detail::ByteWriter w;
  w.raw(kNtipMagic);
  w.u8(static_cast<std::uint8_t>(gate.backend));
  w.u32(static_cast<std::uint32_t>(gate.detector_count()));
  if (gate.backend == GateBackend::kSvm) {
    const auto& svms = std::get<std::vector<LinearSvm>>(gate.detectors);
    const std::size_t dim = svms.empty() ? 0 : svms.front().weights.size();
    w.u32(static_cast<std::uint32_t>(dim));
    for (const auto& s : svms) {
      if (s.weights.size() != dim) throw ShapeError("svm detectors differ in width");
      for (double v : s.weights) w.f64(v);
      w.f64(s.bias);
    }
  } else {
    for (const auto& t : std::get<std::vector<DecisionTree>>(gate.detectors)) {
      w.u32(static_cast<std::uint32_t>(t.max_depth > 0xffffffffu ? 0xffffffffu : t.max_depth));
      w.u32(static_cast<std::uint32_t>(t.min_leaf));
      w.u32(static_cast<std::uint32_t>(t.nodes.size()));
      for (const auto& n : t.nodes) {
        w.i32(n.feature);
        w.f64(n.threshold);
        w.i32(n.left);
        w.i32(n.right);
        w.u8(n.positive ? 1 : 0);
      }
    }
  }
  return w.take();
}

AnomalyGate deserialize_gate(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  for (char c : kNtipMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw FormatError("bad magic (expected \"NTIP\")");
  }
  const std::uint8_t tag = r.u8();
  if (tag != static_cast<std::uint8_t>(GateBackend::kSvm) && tag != static_cast<std::uint8_t>(GateBackend::kDecisionTree)) {
    throw FormatError("kind byte " + std::to_string(tag) + " at byte 4 is not a gate");
  }
  const std::uint32_t count = r.u32();
  if (count != static_cast<std::uint32_t>(kNumClasses)) throw FormatError("gate holds " + std::to_string(count) + " detectors, expected 10");

  AnomalyGate gate;
  gate.backend = static_cast<GateBackend>(tag);
  if (gate.backend == GateBackend::kSvm) {
    const std::uint32_t dim = r.u32();
    std::vector<LinearSvm> svms(count);
    for (auto& s : svms) {
      r.need(8 * (std::size_t{dim} + 1));
      s.weights.resize(dim);
      for (double& v : s.weights) v = r.f64();
      s.bias = r.f64();
    }
    gate.detectors = std::move(svms);
  } else {
    std::vector<DecisionTree> trees(count);
    for (auto& t : trees) {
      t.max_depth = r.u32();
      t.min_leaf = r.u32();
      const std::uint32_t n_nodes = r.u32();
      if (n_nodes == 0) throw FormatError("empty tree at byte " + std::to_string(r.offset()));
      r.need(std::size_t{n_nodes} * 21);
      t.nodes.resize(n_nodes);
      for (auto& n : t.nodes) {
        n.feature = r.i32();
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        n.positive = r.u8() != 0;
      }
      // Children must exist and come after their parent, so traversal terminates.
      for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        auto& n = t.nodes[i];
        if (n.is_leaf()) continue;
        const auto ok = [&](std::int32_t c) { return c > static_cast<std::int32_t>(i) && c < static_cast<std::int32_t>(n_nodes); };
        if (!ok(n.left) || !ok(n.right)) throw FormatError("tree node " + std::to_string(i) + " has invalid children");
        t.nodes[static_cast<std::size_t>(n.left)].depth = n.depth + 1;
        t.nodes[static_cast<std::size_t>(n.right)].depth = n.depth + 1;
      }
    }
    gate.detectors = std::move(trees);
  }
  if (r.remaining() != 0) throw FormatError(std::to_string(r.remaining()) + " trailing bytes after gate payload");
  return gate;
}

void save_gate(const AnomalyGate& gate, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_gate(gate));
}

AnomalyGate load_gate(const std::filesystem::path& path) {
  try {
    return deserialize_gate(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + std::string(e.what()).substr(14));
  }
}

}  // namespace ntrojan
