#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lad/classifier.hpp"
#include "lad/dataset.hpp"

namespace lad {

enum class Criterion { kGini, kEntropy };

struct TreeParams {
  // nullopt grows until leaves are pure or unsplittable.
  std::optional<int> max_depth;
  int min_samples_leaf = 1;
  Criterion criterion = Criterion::kGini;
  // Features drawn (without replacement) at each node; nullopt uses all.
  std::optional<int> random_feature_subset;

  void validate(Eigen::Index dimension) const;
};

struct TreeNode {
  // -1 for leaves.
  int feature = -1;
  Scalar threshold = 0.0;
  int left = -1;
  int right = -1;
  Label label = 0;
  std::vector<int> class_counts;

  bool is_leaf() const { return feature < 0; }
};

// Binary CART tree. Instances with x[feature] <= threshold go left.
class DecisionTree final : public Classifier {
 public:
  DecisionTree() = default;
  // Validates structure; used by training and deserialization.
  DecisionTree(std::vector<TreeNode> nodes, Eigen::Index dimension, int num_classes,
               Vector impurity_decrease);

  Label predict(const VectorRef& x) const override;
  int num_classes() const override { return num_classes_; }
  Eigen::Index dimension() const override { return dimension_; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;
  // Per-feature sum of sample-weighted impurity decreases, unnormalized.
  const Vector& impurity_decrease() const { return impurity_decrease_; }

 private:
  std::vector<TreeNode> nodes_;
  Eigen::Index dimension_ = 0;
  int num_classes_ = 0;
  Vector impurity_decrease_;
};

// Impurity of a class-count histogram; entropy is in bits with 0 log 0 = 0.
double impurity(std::span<const int> counts, Criterion criterion);

// `num_classes` defaults to set.num_classes(); pass it when the classes of
// the labeling model exceed those present in `set`.
DecisionTree train_tree(const LabeledSet& set, const TreeParams& params, std::uint64_t seed,
                        std::optional<int> num_classes = std::nullopt);

// Trains on the multiset of rows selected by `rows` (repeats allowed).
DecisionTree train_tree(const Matrix& instances, const Labels& labels, std::span<const std::size_t> rows,
                        int num_classes, const TreeParams& params, std::uint64_t seed);

// Normalized to sum to one; the zero vector stays zero.
Vector normalize_importances(const VectorRef& decrease);
Vector tree_feature_importances(const DecisionTree& tree);

struct ForestParams {
  int n_trees = 200;
  TreeParams tree_params;
  bool bootstrap = true;
  // Uses round(sqrt(D)) features per split unless tree_params sets a size.
  bool subsample_features = true;
};

class RandomForest final : public Classifier {
 public:
  RandomForest() = default;
  RandomForest(std::vector<DecisionTree> trees, ForestParams params, std::uint64_t seed);

  // Majority vote; ties go to the lowest class index.
  Label predict(const VectorRef& x) const override;
  int num_classes() const override { return num_classes_; }
  Eigen::Index dimension() const override { return dimension_; }

  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t n_trees() const { return trees_.size(); }
  const ForestParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<DecisionTree> trees_;
  ForestParams params_;
  std::uint64_t seed_ = 0;
  Eigen::Index dimension_ = 0;
  int num_classes_ = 0;
};

RandomForest train_forest(const LabeledSet& set, const ForestParams& params, std::uint64_t seed);

}  // namespace lad
