#include "lad/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lad/random.hpp"

namespace lad {

namespace {

// Gains closer than this are treated as equal so ties resolve by order.
constexpr double kGainTolerance = 1e-12;

struct SplitChoice {
  int feature = -1;
  Scalar threshold = 0.0;
  double decrease = 0.0;

  bool found() const { return feature >= 0; }
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const Labels& y, int num_classes, const TreeParams& params, std::uint64_t seed)
      : x_(x), y_(y), num_classes_(num_classes), params_(params), rng_(seed),
        decrease_(Vector::Zero(x.cols())) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    root_size_ = static_cast<double>(rows.size());
    grow(rows, 0);
    return DecisionTree(std::move(nodes_), x_.cols(), num_classes_, std::move(decrease_));
  }

 private:
  std::vector<int> histogram(const std::vector<std::size_t>& rows) const {
    std::vector<int> counts(static_cast<std::size_t>(num_classes_), 0);
    for (auto r : rows) ++counts[static_cast<std::size_t>(y_[r])];
    return counts;
  }

  std::vector<int> candidate_features() {
    const int d = static_cast<int>(x_.cols());
    std::vector<int> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), 0);
    if (!params_.random_feature_subset || *params_.random_feature_subset >= d) return all;
    const int k = *params_.random_feature_subset;
    for (int i = 0; i < k; ++i) {
      const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng_() % static_cast<std::uint64_t>(d - i));
      std::swap(all[static_cast<std::size_t>(i)], all[j]);
    }
    all.resize(static_cast<std::size_t>(k));
    std::sort(all.begin(), all.end());
    return all;
  }

  SplitChoice best_split(const std::vector<std::size_t>& rows, const std::vector<int>& parent_counts) {
    const double n = static_cast<double>(rows.size());
    const double parent_impurity = impurity(parent_counts, params_.criterion);
    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    SplitChoice best;
    std::vector<std::pair<Scalar, Label>> column(rows.size());
    std::vector<int> left(static_cast<std::size_t>(num_classes_));
    std::vector<int> right(static_cast<std::size_t>(num_classes_));

    for (int f : candidate_features()) {
      for (std::size_t k = 0; k < rows.size(); ++k) column[k] = {x_(static_cast<Eigen::Index>(rows[k]), f), y_[rows[k]]};
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      std::fill(left.begin(), left.end(), 0);
      right = parent_counts;
      for (std::size_t k = 0; k + 1 < column.size(); ++k) {
        ++left[static_cast<std::size_t>(column[k].second)];
        --right[static_cast<std::size_t>(column[k].second)];
        const Scalar lo = column[k].first;
        const Scalar hi = column[k + 1].first;
        if (!(lo < hi)) continue;
        const std::size_t n_left = k + 1;
        const std::size_t n_right = column.size() - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double decrease = parent_impurity -
                                (static_cast<double>(n_left) / n) * impurity(left, params_.criterion) -
                                (static_cast<double>(n_right) / n) * impurity(right, params_.criterion);
        if (!best.found() || decrease > best.decrease + kGainTolerance) {
          Scalar mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best = {f, mid, decrease};
        }
      }
    }
    return best;
  }

  int grow(const std::vector<std::size_t>& rows, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    TreeNode node;
    node.class_counts = histogram(rows);
    node.label = static_cast<Label>(std::max_element(node.class_counts.begin(), node.class_counts.end()) -
                                    node.class_counts.begin());

    const bool pure = node.class_counts[static_cast<std::size_t>(node.label)] == static_cast<int>(rows.size());
    const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
    const bool too_small = rows.size() < 2 * static_cast<std::size_t>(params_.min_samples_leaf);
    if (pure || depth_reached || too_small) {
      nodes_[static_cast<std::size_t>(index)] = std::move(node);
      return index;
    }
    const SplitChoice split = best_split(rows, node.class_counts);
    // Zero-gain splits are kept (XOR-like layouts need them); only nodes
    // without any candidate threshold become leaves here.
    if (!split.found()) {
      nodes_[static_cast<std::size_t>(index)] = std::move(node);
      return index;
    }

    decrease_[split.feature] += (static_cast<double>(rows.size()) / root_size_) * std::max(0.0, split.decrease);
    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (auto r : rows) {
      (x_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold ? left_rows : right_rows).push_back(r);
    }
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = grow(left_rows, depth + 1);
    node.right = grow(right_rows, depth + 1);
    nodes_[static_cast<std::size_t>(index)] = std::move(node);
    return index;
  }

  const Matrix& x_;
  const Labels& y_;
  int num_classes_;
  TreeParams params_;
  Rng rng_;
  Vector decrease_;
  double root_size_ = 0.0;
  std::vector<TreeNode> nodes_;
};

}  // namespace

void TreeParams::validate(Eigen::Index dimension) const {
  if (max_depth && *max_depth < 1) throw Error("max_depth must be >= 1");
  if (min_samples_leaf < 1) throw Error("min_samples_leaf must be >= 1");
  if (random_feature_subset && (*random_feature_subset < 1 || *random_feature_subset > dimension)) {
    throw Error("random_feature_subset must lie in [1, D]");
  }
}

double impurity(std::span<const int> counts, Criterion criterion) {
  double total = 0.0;
  for (int c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double acc = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    const double p = c / total;
    acc += criterion == Criterion::kGini ? p * p : -p * std::log2(p);
  }
  return criterion == Criterion::kGini ? 1.0 - acc : acc;
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, Eigen::Index dimension, int num_classes,
                           Vector impurity_decrease)
    : nodes_(std::move(nodes)), dimension_(dimension), num_classes_(num_classes),
      impurity_decrease_(std::move(impurity_decrease)) {
  if (nodes_.empty()) throw Error("tree has no nodes");
  if (impurity_decrease_.size() != dimension_) throw Error("importance vector length differs from dimension");
  const int n = static_cast<int>(nodes_.size());
  for (int i = 0; i < n; ++i) {
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.label < 0 || node.label >= num_classes_) throw Error("tree node label out of range");
    if (node.is_leaf()) continue;
    if (node.feature >= dimension_) throw Error("tree split feature out of range");
    // Preorder storage: children come after their parent.
    if (node.left <= i || node.left >= n || node.right <= i || node.right >= n) {
      throw Error("tree child index out of range");
    }
  }
}

Label DecisionTree::predict(const VectorRef& x) const {
  check_dimension(x);
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x[node.feature] <= node.threshold ? node.left : node.right);
  }
  return nodes_[i].label;
}

int DecisionTree::depth() const {
  std::vector<int> depth_of(nodes_.size(), 0);
  int best = 0;
  // Children always follow their parent in preorder storage.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, depth_of[i]);
    if (nodes_[i].is_leaf()) continue;
    depth_of[static_cast<std::size_t>(nodes_[i].left)] = depth_of[i] + 1;
    depth_of[static_cast<std::size_t>(nodes_[i].right)] = depth_of[i] + 1;
  }
  return best;
}

DecisionTree train_tree(const Matrix& instances, const Labels& labels, std::span<const std::size_t> rows,
                        int num_classes, const TreeParams& params, std::uint64_t seed) {
  params.validate(instances.cols());
  if (rows.empty()) throw Error("cannot train a tree on an empty set");
  if (static_cast<Eigen::Index>(labels.size()) != instances.rows()) throw Error("instances and labels differ in length");
  for (auto r : rows) {
    if (labels[r] < 0 || labels[r] >= num_classes) throw Error("label out of range");
  }
  TreeBuilder builder(instances, labels, num_classes, params, seed);
  return builder.build({rows.begin(), rows.end()});
}

DecisionTree train_tree(const LabeledSet& set, const TreeParams& params, std::uint64_t seed,
                        std::optional<int> num_classes) {
  set.validate();
  std::vector<std::size_t> rows(static_cast<std::size_t>(set.size()));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return train_tree(set.instances, set.labels, rows, num_classes.value_or(std::max(1, set.num_classes())), params,
                    seed);
}

Vector normalize_importances(const VectorRef& decrease) {
  const double total = decrease.sum();
  if (total <= 0.0) return Vector::Zero(decrease.size());
  return decrease / total;
}

Vector tree_feature_importances(const DecisionTree& tree) { return normalize_importances(tree.impurity_decrease()); }

RandomForest::RandomForest(std::vector<DecisionTree> trees, ForestParams params, std::uint64_t seed)
    : trees_(std::move(trees)), params_(std::move(params)), seed_(seed) {
  if (trees_.empty()) throw Error("forest has no trees");
  params_.n_trees = static_cast<int>(trees_.size());
  dimension_ = trees_.front().dimension();
  num_classes_ = trees_.front().num_classes();
  for (const auto& t : trees_) {
    if (t.dimension() != dimension_ || t.num_classes() != num_classes_) throw Error("inconsistent trees in forest");
  }
}

Label RandomForest::predict(const VectorRef& x) const {
  check_dimension(x);
  std::vector<int> votes(static_cast<std::size_t>(num_classes_), 0);
  for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.predict(x))];
  return static_cast<Label>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

RandomForest train_forest(const LabeledSet& set, const ForestParams& params, std::uint64_t seed) {
  set.validate();
  if (params.n_trees < 1) throw Error("n_trees must be >= 1");
  if (set.distinct_labels() < 2) throw Error("forest training needs at least 2 classes");
  ForestParams effective = params;
  if (effective.subsample_features && !effective.tree_params.random_feature_subset) {
    const auto k = std::lround(std::sqrt(static_cast<double>(set.dimension())));
    effective.tree_params.random_feature_subset = static_cast<int>(std::max(1L, k));
  }
  effective.tree_params.validate(set.dimension());

  const auto n = static_cast<std::size_t>(set.size());
  const int classes = set.num_classes();
  std::vector<DecisionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int i = 0; i < params.n_trees; ++i) {
    const std::uint64_t tree_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    std::vector<std::size_t> rows(n);
    if (effective.bootstrap) {
      Rng rng(derive_seed(tree_seed, 0x5eed));
      for (auto& r : rows) r = static_cast<std::size_t>(rng() % n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees.push_back(train_tree(set.instances, set.labels, rows, classes, effective.tree_params, tree_seed));
  }
  return RandomForest(std::move(trees), effective, seed);
}

Labels Classifier::predict_batch(const Matrix& rows) const {
  if (rows.rows() > 0 && rows.cols() != dimension()) {
    throw DimensionError("expected " + std::to_string(dimension()) + " features, got " +
                         std::to_string(rows.cols()));
  }
  Labels out(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out[static_cast<std::size_t>(i)] = predict(rows.row(i).transpose());
  return out;
}

double accuracy(const Classifier& model, const LabeledSet& set) {
  if (set.size() == 0) return 0.0;
  const Labels pred = model.predict_batch(set.instances);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == set.labels[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace lad
