#pragma once

#include <cstdint>
#include <vector>

#include "lad/classifier.hpp"
#include "lad/dataset.hpp"

namespace lad {

// Multinomial linear scorer: scores = W x + bias, label = argmax (lowest
// index on ties), probabilities = softmax(scores).
class LinearSoftmax final : public Classifier {
 public:
  LinearSoftmax() = default;
  LinearSoftmax(Matrix weights, Vector bias);

  Label predict(const VectorRef& x) const override;
  int num_classes() const override { return static_cast<int>(weights_.rows()); }
  Eigen::Index dimension() const override { return weights_.cols(); }

  Vector scores(const VectorRef& x) const;
  Vector probabilities(const VectorRef& x) const;
  // d probabilities / dx, one row per class:
  // J_c = p_c (W_c - sum_k p_k W_k).
  Matrix jacobian(const VectorRef& x) const;

  const Matrix& weights() const { return weights_; }
  const Vector& bias() const { return bias_; }

 private:
  Matrix weights_;  // C x D
  Vector bias_;
};

struct AugmentConfig {
  Eigen::Index seed_set_size = 150;
  int rho = 4;
  // Scaled-feature units.
  double lambda = 0.05;
  double learning_rate = 0.1;
  int iterations = 500;
  std::uint64_t seed = 0;

  void validate() const;
};

// Full-batch gradient descent on mean softmax cross-entropy from zero
// weights. Throws when the loss becomes non-finite; `epoch` names the
// augmentation round in the message.
LinearSoftmax fit_softmax(const Matrix& instances, const Labels& labels, int num_classes, double learning_rate,
                          int iterations, int epoch = 0);

// x + lambda * sign(d p_label / dx), clipped to `box`, with sign(0) = 0.
Vector augmented_point(const VectorRef& x, const LinearSoftmax& substitute, Label label, double lambda,
                       const BoundingBox& box);

class Substitute final : public Classifier {
 public:
  Substitute(LinearSoftmax model, AugmentConfig config, Matrix training_set)
      : model_(std::move(model)), config_(config), training_set_(std::move(training_set)) {}

  Label predict(const VectorRef& x) const override { return model_.predict(x); }
  int num_classes() const override { return model_.num_classes(); }
  Eigen::Index dimension() const override { return model_.dimension(); }

  const LinearSoftmax& model() const { return model_; }
  const AugmentConfig& config() const { return config_; }
  const Matrix& training_set() const { return training_set_; }

 private:
  LinearSoftmax model_;
  AugmentConfig config_;
  Matrix training_set_;
};

// Global substitute grown by Jacobian-based augmentation: each of the rho
// rounds trains on the current set labeled by the black box and adds one
// stepped copy of every point, so the final set has |seed| * 2^rho rows.
Substitute train_substitute(const Classifier& black_box, const Matrix& seed_set, const AugmentConfig& config,
                            const BoundingBox& box);

// `count` distinct rows of `pool`, without replacement, in draw order.
Matrix draw_seed_set(const Matrix& pool, Eigen::Index count, std::uint64_t seed);

}  // namespace lad
