#pragma once

// Bagged CART forests for the two document classifiers: a binary
// domain classifier (leaf = class-1 fraction, i.e. a probability) and a
// 1-10 regression scorer (leaf = mean rating).
//
// Each tree trains on a bootstrap sample with ceil(sqrt(dim)) candidate
// features per split; split criterion is Gini impurity (binary) or sum of
// squared errors (regression).  Tree t uses its own Rng seeded with
// seed + t, so training is reproducible and trees are independent of
// training order (they may be built in any order or in parallel).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "synthweave/embed.hpp"
#include "synthweave/jsonl.hpp"

namespace synthweave {

enum class ForestTask { binary, regression };

struct LabeledExample {
  EmbeddingVector embedding;
  double label = 0.0;
};

struct TreeNode {
  int feature = -1;      // -1 => leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;    // leaf output

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const EmbeddingVector& v) const {
    int at = 0;
    for (;;) {
      const TreeNode& n = nodes[static_cast<std::size_t>(at)];
      if (n.is_leaf()) return n.value;
      at = (v.values[static_cast<std::size_t>(n.feature)] <= n.threshold)
               ? n.left
               : n.right;
    }
  }
};

struct Forest {
  ForestTask task = ForestTask::binary;
  std::vector<Tree> trees;
  int n_trees = 0;
  int max_depth = 0;
  std::uint64_t seed = 0;
  std::size_t dim = 0;
};

namespace detail {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Weighted impurity of a (count, sum, sum of squares / positive count)
// partition; lower is better.
inline double gini_impurity(double n, double n_pos) {
  if (n <= 0.0) return 0.0;
  double p = n_pos / n;
  return n * 2.0 * p * (1.0 - p);
}

inline double sse_impurity(double n, double sum, double sum_sq) {
  if (n <= 0.0) return 0.0;
  return sum_sq - sum * sum / n;
}

inline void build_node(const std::vector<LabeledExample>& ex,
                       std::vector<std::size_t>& idx, std::size_t begin,
                       std::size_t end, int depth, int max_depth,
                       ForestTask task, std::size_t n_candidates, Rng& rng,
                       std::vector<int>& feature_scratch, Tree& tree) {
  std::size_t n = end - begin;
  std::size_t node_at = tree.nodes.size();
  tree.nodes.emplace_back();

  double sum = 0.0, sum_sq = 0.0;
  bool constant = true;
  double first = ex[idx[begin]].label;
  for (std::size_t i = begin; i < end; ++i) {
    double y = ex[idx[i]].label;
    sum += y;
    sum_sq += y * y;
    if (y != first) constant = false;
  }
  double mean = sum / static_cast<double>(n);

  auto make_leaf = [&] { tree.nodes[node_at].value = mean; };

  if (depth >= max_depth || n < 2 || constant) {
    make_leaf();
    return;
  }

  std::size_t dim = ex[idx[begin]].embedding.dim();

  // Sample n_candidates distinct features (partial Fisher-Yates).
  feature_scratch.resize(dim);
  for (std::size_t f = 0; f < dim; ++f)
    feature_scratch[f] = static_cast<int>(f);
  std::size_t m = std::min(n_candidates, dim);
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t j = k + static_cast<std::size_t>(rng.uniform_int(dim - k));
    std::swap(feature_scratch[k], feature_scratch[j]);
  }

  double parent_impurity =
      (task == ForestTask::binary)
          ? gini_impurity(static_cast<double>(n), sum)
          : sse_impurity(static_cast<double>(n), sum, sum_sq);

  SplitChoice best;
  std::vector<std::pair<double, double>> vals;  // (feature value, label)
  vals.reserve(n);
  for (std::size_t k = 0; k < m; ++k) {
    int f = feature_scratch[k];
    vals.clear();
    for (std::size_t i = begin; i < end; ++i)
      vals.emplace_back(ex[idx[i]].embedding.values[static_cast<std::size_t>(f)],
                        ex[idx[i]].label);
    std::sort(vals.begin(), vals.end());

    double left_n = 0.0, left_sum = 0.0, left_sq = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      left_n += 1.0;
      left_sum += vals[i - 1].second;
      left_sq += vals[i - 1].second * vals[i - 1].second;
      if (vals[i].first == vals[i - 1].first) continue;  // no boundary here
      double right_n = static_cast<double>(n) - left_n;
      double child_impurity =
          (task == ForestTask::binary)
              ? gini_impurity(left_n, left_sum) +
                    gini_impurity(right_n, sum - left_sum)
              : sse_impurity(left_n, left_sum, left_sq) +
                    sse_impurity(right_n, sum - left_sum, sum_sq - left_sq);
      double gain = parent_impurity - child_impurity;
      if (gain > best.gain + 1e-12) {
        best.found = true;
        best.feature = f;
        best.threshold = vals[i - 1].first +
                         0.5 * (vals[i].first - vals[i - 1].first);
        best.gain = gain;
      }
    }
  }

  if (!best.found) {
    make_leaf();
    return;
  }

  // Partition idx[begin,end) by the chosen split, preserving relative
  // order on each side (stable => deterministic child layouts).
  std::vector<std::size_t> left_ids, right_ids;
  for (std::size_t i = begin; i < end; ++i) {
    double x = ex[idx[i]].embedding.values[static_cast<std::size_t>(best.feature)];
    (x <= best.threshold ? left_ids : right_ids).push_back(idx[i]);
  }
  if (left_ids.empty() || right_ids.empty()) {  // degenerate; shouldn't happen
    make_leaf();
    return;
  }
  std::copy(left_ids.begin(), left_ids.end(),
            idx.begin() + static_cast<std::ptrdiff_t>(begin));
  std::copy(right_ids.begin(), right_ids.end(),
            idx.begin() + static_cast<std::ptrdiff_t>(begin) +
                static_cast<std::ptrdiff_t>(left_ids.size()));
  std::size_t mid = begin + left_ids.size();

  tree.nodes[node_at].feature = best.feature;
  tree.nodes[node_at].threshold = best.threshold;
  tree.nodes[node_at].left = static_cast<int>(tree.nodes.size());
  build_node(ex, idx, begin, mid, depth + 1, max_depth, task, n_candidates,
             rng, feature_scratch, tree);
  tree.nodes[node_at].right = static_cast<int>(tree.nodes.size());
  build_node(ex, idx, mid, end, depth + 1, max_depth, task, n_candidates, rng,
             feature_scratch, tree);
}

}  // namespace detail

inline Forest train_forest(const std::vector<LabeledExample>& examples,
                           ForestTask task, int n_trees = 100,
                           int max_depth = 12, std::uint64_t seed = 0) {
  if (examples.size() < 2)
    throw ArgumentError("train_forest: need at least 2 examples");
  if (n_trees < 1) throw ArgumentError("train_forest: n_trees must be >= 1");
  if (max_depth < 1) throw ArgumentError("train_forest: max_depth must be >= 1");

  std::size_t dim = examples[0].embedding.dim();
  bool saw0 = false, saw1 = false;
  for (const LabeledExample& e : examples) {
    if (e.embedding.dim() != dim)
      throw IntegrityError("train_forest: inconsistent embedding dims");
    if (task == ForestTask::binary) {
      if (e.label == 0.0)
        saw0 = true;
      else if (e.label == 1.0)
        saw1 = true;
      else
        throw ArgumentError("train_forest: binary labels must be 0 or 1");
    } else if (e.label < 1.0 || e.label > 10.0) {
      throw ArgumentError("train_forest: regression labels must lie in [1,10]");
    }
  }
  if (task == ForestTask::binary && (!saw0 || !saw1))
    throw Error("train_forest: binary training set has a single class");

  std::size_t n_candidates = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(dim))));

  Forest forest;
  forest.task = task;
  forest.n_trees = n_trees;
  forest.max_depth = max_depth;
  forest.seed = seed;
  forest.dim = dim;
  forest.trees.resize(static_cast<std::size_t>(n_trees));

  std::size_t n = examples.size();
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(seed + static_cast<std::uint64_t>(t));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
      idx[i] = static_cast<std::size_t>(rng.uniform_int(n));  // bootstrap
    std::vector<int> scratch;
    Tree& tree = forest.trees[static_cast<std::size_t>(t)];
    tree.nodes.reserve(64);
    detail::build_node(examples, idx, 0, n, 0, max_depth, task, n_candidates,
                       rng, scratch, tree);
  }
  return forest;
}

inline double predict(const Forest& forest, const EmbeddingVector& v) {
  if (v.dim() != forest.dim)
    throw ArgumentError("predict: vector dim " + std::to_string(v.dim()) +
                        " does not match training dim " +
                        std::to_string(forest.dim));
  double sum = 0.0;
  for (const Tree& t : forest.trees) sum += t.predict(v);
  return sum / static_cast<double>(forest.trees.size());
}

// -------------------------------------------------------- serialization

inline json forest_to_json(const Forest& f) {
  json trees = json::array();
  for (const Tree& t : f.trees) {
    json nodes = json::array();
    for (const TreeNode& n : t.nodes)
      nodes.push_back(json::array(
          {n.feature, n.threshold, n.left, n.right, n.value}));
    trees.push_back(std::move(nodes));
  }
  return json{{"format_version", 1},
              {"task", f.task == ForestTask::binary ? "binary" : "regression"},
              {"n_trees", f.n_trees},
              {"max_depth", f.max_depth},
              {"seed", f.seed},
              {"dim", f.dim},
              {"trees", std::move(trees)}};
}

inline Forest forest_from_json(const json& j) {
  if (!j.is_object() || j.value("format_version", 0) != 1)
    throw ParseError("forest: unsupported or missing format_version");
  Forest f;
  std::string task = j.at("task").get<std::string>();
  if (task == "binary")
    f.task = ForestTask::binary;
  else if (task == "regression")
    f.task = ForestTask::regression;
  else
    throw ParseError("forest: unknown task '" + task + "'");
  f.n_trees = j.at("n_trees").get<int>();
  f.max_depth = j.at("max_depth").get<int>();
  f.seed = j.at("seed").get<std::uint64_t>();
  f.dim = j.at("dim").get<std::size_t>();
  for (const json& jt : j.at("trees")) {
    Tree t;
    for (const json& jn : jt) {
      if (!jn.is_array() || jn.size() != 5)
        throw ParseError("forest: malformed tree node");
      TreeNode n;
      n.feature = jn[0].get<int>();
      n.threshold = jn[1].get<double>();
      n.left = jn[2].get<int>();
      n.right = jn[3].get<int>();
      n.value = jn[4].get<double>();
      t.nodes.push_back(n);
    }
    if (t.nodes.empty()) throw ParseError("forest: empty tree");
    f.trees.push_back(std::move(t));
  }
  if (f.trees.size() != static_cast<std::size_t>(f.n_trees))
    throw IntegrityError("forest: tree count does not match n_trees");
  return f;
}

}  // namespace synthweave
