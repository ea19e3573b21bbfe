#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lad/random.hpp"
#include "lad/types.hpp"

namespace lad {

enum class FeatureKind { kNumeric, kCategorical };

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  // Categorical levels in declaration order; level i is encoded as i.
  std::vector<std::string> levels;
  Scalar lower = 0.0;
  Scalar upper = 1.0;

  bool is_categorical() const { return kind == FeatureKind::kCategorical; }
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<FeatureMeta> features,
                         std::vector<std::string> class_names = {});

  Eigen::Index dimension() const { return static_cast<Eigen::Index>(features_.size()); }
  const std::vector<FeatureMeta>& features() const { return features_; }
  const FeatureMeta& feature(Eigen::Index i) const { return features_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& class_names() const { return class_names_; }

  // -1 when absent.
  Eigen::Index index_of(const std::string& name) const;

  Scalar encode_value(Eigen::Index feature, const std::string& raw) const;
  std::string decode_value(Eigen::Index feature, Scalar value) const;
  Vector encode_row(const std::vector<std::string>& raw) const;
  std::vector<std::string> decode_row(const VectorRef& values) const;

  // Replaces numeric bounds with the per-column min/max of `rows`.
  // Categorical bounds stay at [0, L-1]. A constant numeric column gets
  // upper = lower + 1 so that lower < upper holds.
  FeatureSchema with_fitted_bounds(const Matrix& rows) const;

  std::uint64_t hash() const;

 private:
  std::vector<FeatureMeta> features_;
  std::vector<std::string> class_names_;
};

struct LabeledSet {
  Matrix instances;
  Labels labels;
  // Row number of each instance in its source table.
  std::vector<std::size_t> row_ids;

  Eigen::Index size() const { return instances.rows(); }
  Eigen::Index dimension() const { return instances.cols(); }
  int num_classes() const;
  int distinct_labels() const;
  // Checks equal lengths and finiteness; throws Error otherwise.
  void validate() const;
  LabeledSet subset(const std::vector<std::size_t>& indices) const;
};

struct ColumnSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  std::vector<std::string> levels;
};

// Describes how to read a delimited table. The label column must be one of
// `columns`; its levels (if given) define the class codes, otherwise the
// sorted distinct label strings do.
struct SchemaSpec {
  std::vector<ColumnSpec> columns;
  std::string label;
  char delimiter = ',';
  bool header = true;
  // Runs of delimiters count as one (whitespace-separated formats).
  bool collapse_delimiters = false;
};

// Sidecar JSON: {"columns": [{"name", "kind", "levels"?}], "label": name}.
SchemaSpec load_schema_spec(const std::string& path);

// The UCI Statlog German Credit layout: 20 attributes, space separated,
// label column last with values {1, 2} mapped to {0, 1}.
SchemaSpec german_credit_spec();

struct Table {
  LabeledSet data;
  FeatureSchema schema;
};

Table load_table(const std::string& path, const SchemaSpec& spec);
Table parse_table(const std::string& text, const SchemaSpec& spec);

// Stratified partition. Train receives round(n * train_fraction) instances,
// allocated to classes by largest remainder. Both parts keep source order.
std::pair<LabeledSet, LabeledSet> split(const LabeledSet& set, double train_fraction,
                                        std::uint64_t seed);

struct BoundingBox {
  Vector lower;
  Vector upper;

  Eigen::Index dimension() const { return lower.size(); }
  bool contains(const VectorRef& x) const;
  bool degenerate() const { return ((upper - lower).array() <= 0.0).all(); }
  Vector clip(const VectorRef& x) const;
  BoundingBox expanded_to(const VectorRef& x) const;
  Vector sample(Rng& rng) const;
};

BoundingBox bounding_box(const Matrix& rows, double margin_fraction = 0.0);

// Largest Euclidean distance from x_hat to any row.
Scalar max_distance(const VectorRef& x_hat, const Matrix& rows);

// Min-max scaling onto [0, 1] using schema bounds.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  explicit MinMaxScaler(const FeatureSchema& schema);
  MinMaxScaler(Vector lower, Vector upper);

  Vector scale(const VectorRef& x) const;
  Vector unscale(const VectorRef& z) const;
  Matrix scale(const Matrix& rows) const;
  const Vector& lower() const { return lower_; }
  const Vector& span() const { return span_; }

 private:
  Vector lower_;
  Vector span_;
};

}  // namespace lad
