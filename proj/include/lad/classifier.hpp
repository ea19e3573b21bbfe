#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "lad/dataset.hpp"
#include "lad/types.hpp"

namespace lad {

// Query-only access to a trained model: labels in, labels out. Implementations
// must be deterministic and safe to call concurrently.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual Label predict(const VectorRef& x) const = 0;
  virtual int num_classes() const = 0;
  virtual Eigen::Index dimension() const = 0;

  Labels predict_batch(const Matrix& rows) const;

 protected:
  void check_dimension(const VectorRef& x) const {
    if (x.size() != dimension()) {
      throw DimensionError("expected " + std::to_string(dimension()) + " features, got " +
                           std::to_string(x.size()));
    }
  }
};

// Wraps an arbitrary labeling function.
class FunctionClassifier final : public Classifier {
 public:
  using Fn = std::function<Label(const VectorRef&)>;

  FunctionClassifier(Eigen::Index dimension, int num_classes, Fn fn)
      : dimension_(dimension), num_classes_(num_classes), fn_(std::move(fn)) {}

  Label predict(const VectorRef& x) const override {
    check_dimension(x);
    return fn_(x);
  }
  int num_classes() const override { return num_classes_; }
  Eigen::Index dimension() const override { return dimension_; }

 private:
  Eigen::Index dimension_;
  int num_classes_;
  Fn fn_;
};

// Presents a model trained on encoded values as a classifier over the
// min-max scaled space in which all sampling and distances live.
class ScaledClassifier final : public Classifier {
 public:
  ScaledClassifier(std::shared_ptr<const Classifier> inner, MinMaxScaler scaler)
      : inner_(std::move(inner)), scaler_(std::move(scaler)) {}

  Label predict(const VectorRef& z) const override {
    check_dimension(z);
    return inner_->predict(scaler_.unscale(z));
  }
  int num_classes() const override { return inner_->num_classes(); }
  Eigen::Index dimension() const override { return inner_->dimension(); }
  const MinMaxScaler& scaler() const { return scaler_; }

 private:
  std::shared_ptr<const Classifier> inner_;
  MinMaxScaler scaler_;
};

double accuracy(const Classifier& model, const LabeledSet& set);

}  // namespace lad
