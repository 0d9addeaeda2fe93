#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>

#include "ntrojan/anomaly.hpp"
#include "ntrojan/errors.hpp"

namespace ntrojan {

double gini(double positives, double negatives) {
  const double n = positives + negatives;
  if (n <= 0.0) return 0.0;
  const double p = positives / n;
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

bool DecisionTree::positive(std::span<const double> x) const {
  if (nodes.empty()) throw ContractError("empty decision tree");
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto f = static_cast<std::size_t>(nodes[i].feature);
    if (f >= x.size()) throw ShapeError("tree feature index beyond input width");
    i = static_cast<std::size_t>(x[f] <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
  }
  return nodes[i].positive;
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max<std::size_t>(d, n.depth);
  return d;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

// Split search state for one node of the level being grown.
struct Candidate {
  std::uint32_t node;
  double pos = 0, neg = 0;
  double parent_gini = 0;
  // Running left-side counts while scanning one feature.
  double left_pos = 0, left_neg = 0;
  double last_value = 0;
  bool has_prev = false;
  // Best split so far.
  double best_gain = 0;
  std::int32_t best_feature = -1;
  double best_threshold = 0;
};

}  // namespace

DecisionTree dt_train(const Matrix& features, std::span<const std::uint8_t> targets, std::size_t max_depth,
                      std::size_t min_leaf) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n == 0) throw SizeError("decision tree needs at least one sample");
  if (targets.size() != n) throw ShapeError("tree target count differs from sample count");
  min_leaf = std::max<std::size_t>(min_leaf, 1);

  DecisionTree tree;
  tree.max_depth = max_depth;
  tree.min_leaf = min_leaf;

  // Per-feature sample order by (value, index), with the values laid out
  // contiguously so each scan is sequential.
  std::vector<std::uint32_t> sorted_idx(n * d);
  std::vector<double> sorted_val(n * d);
  {
    std::vector<std::uint32_t> order(n);
    std::vector<double> column(n);
    for (std::size_t f = 0; f < d; ++f) {
      for (std::size_t i = 0; i < n; ++i) column[i] = features(i, f);
      std::iota(order.begin(), order.end(), 0u);
      std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return column[a] < column[b]; });
      for (std::size_t j = 0; j < n; ++j) {
        sorted_idx[f * n + j] = order[j];
        sorted_val[f * n + j] = column[order[j]];
      }
    }
  }

  TreeNode root;
  for (auto t : targets) (t ? root.n_positive : root.n_negative) += 1;
  tree.nodes.push_back(root);

  // Node each sample currently sits in, or -1 once its node became a leaf.
  std::vector<std::int32_t> node_of(n, 0);
  std::vector<std::uint32_t> frontier{0};

  while (!frontier.empty()) {
    std::vector<Candidate> cands;
    std::vector<std::int32_t> cand_of(tree.nodes.size(), -1);
    for (std::uint32_t id : frontier) {
      auto& node = tree.nodes[id];
      node.positive = node.n_positive > node.n_negative;
      const std::size_t size = std::size_t{node.n_positive} + node.n_negative;
      const bool pure = node.n_positive == 0 || node.n_negative == 0;
      if (pure || node.depth >= max_depth || size < 2 * min_leaf) continue;
      Candidate c;
      c.node = id;
      c.pos = node.n_positive;
      c.neg = node.n_negative;
      c.parent_gini = gini(c.pos, c.neg);
      cand_of[id] = static_cast<std::int32_t>(cands.size());
      cands.push_back(c);
    }
    for (std::size_t s = 0; s < n; ++s) {
      if (node_of[s] >= 0 && cand_of[static_cast<std::size_t>(node_of[s])] < 0) node_of[s] = -1;
    }
    if (cands.empty()) break;

    const auto min_leaf_d = static_cast<double>(min_leaf);
    for (std::size_t f = 0; f < d; ++f) {
      for (auto& c : cands) {
        c.left_pos = c.left_neg = 0;
        c.has_prev = false;
      }
      const std::uint32_t* idx = sorted_idx.data() + f * n;
      const double* val = sorted_val.data() + f * n;
      for (std::size_t j = 0; j < n; ++j) {
        const std::uint32_t s = idx[j];
        if (node_of[s] < 0) continue;
        Candidate& c = cands[static_cast<std::size_t>(cand_of[static_cast<std::size_t>(node_of[s])])];
        const double v = val[j];
        if (c.has_prev && v > c.last_value) {
          const double nl = c.left_pos + c.left_neg;
          const double total = c.pos + c.neg;
          const double nr = total - nl;
          if (nl >= min_leaf_d && nr >= min_leaf_d) {
            const double gain = c.parent_gini - (nl / total) * gini(c.left_pos, c.left_neg) -
                                (nr / total) * gini(c.pos - c.left_pos, c.neg - c.left_neg);
            if (gain > c.best_gain) {
              c.best_gain = gain;
              c.best_feature = static_cast<std::int32_t>(f);
              c.best_threshold = 0.5 * (c.last_value + v);
            }
          }
        }
        (targets[s] ? c.left_pos : c.left_neg) += 1;
        c.last_value = v;
        c.has_prev = true;
      }
    }

    std::vector<std::uint32_t> next;
    std::vector<std::int32_t> left_child(tree.nodes.size(), -1);
    for (const auto& c : cands) {
      if (c.best_feature < 0) continue;
      const auto left = static_cast<std::int32_t>(tree.nodes.size());
      TreeNode l, r;
      l.depth = r.depth = tree.nodes[c.node].depth + 1;
      tree.nodes.push_back(l);
      tree.nodes.push_back(r);
      auto& parent = tree.nodes[c.node];
      parent.feature = c.best_feature;
      parent.threshold = c.best_threshold;
      parent.left = left;
      parent.right = left + 1;
      left_child[c.node] = left;
      next.push_back(static_cast<std::uint32_t>(left));
      next.push_back(static_cast<std::uint32_t>(left + 1));
    }
    for (std::size_t s = 0; s < n; ++s) {
      if (node_of[s] < 0) continue;
      const auto parent_id = static_cast<std::size_t>(node_of[s]);
      const std::int32_t left = left_child[parent_id];
      if (left < 0) {
        node_of[s] = -1;
        continue;
      }
      const auto& parent = tree.nodes[parent_id];
      const bool go_left = features(s, static_cast<std::size_t>(parent.feature)) <= parent.threshold;
      const std::int32_t child = go_left ? left : left + 1;
      node_of[s] = child;
      (targets[s] ? tree.nodes[static_cast<std::size_t>(child)].n_positive
                  : tree.nodes[static_cast<std::size_t>(child)].n_negative) += 1;
    }
    frontier = std::move(next);
  }
  return tree;
}

DecisionTree dt_train(const Dataset& data, int positive_class, std::size_t max_depth, std::size_t min_leaf) {
  if (!data.labeled()) throw ContractError("tree training data must be labeled");
  std::vector<std::uint8_t> targets(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) targets[i] = (*data.labels)[i] == positive_class ? 1 : 0;
  return dt_train(data.images, targets, max_depth, min_leaf);
}

}  // namespace ntrojan
