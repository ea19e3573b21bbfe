#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lad/classifier.hpp"
#include "lad/dataset.hpp"
#include "lad/forest.hpp"

namespace lad {

struct KeyFeaturePolicy {
  enum class Kind { kTopK, kThreshold };
  Kind kind = Kind::kTopK;
  int k = 5;
  double threshold = 0.1;

  static KeyFeaturePolicy top_k(int k) { return {Kind::kTopK, k, 0.0}; }
  static KeyFeaturePolicy at_least(double t) { return {Kind::kThreshold, 0, t}; }
};

struct LadConfig {
  int n_support = 1000;
  int m_segment = 100;
  int p_sphere = 20;
  // Scaled-feature units.
  double sphere_radius = 0.02;
  TreeParams surrogate_params{5, 1, Criterion::kGini, std::nullopt};
  KeyFeaturePolicy key_feature_policy = KeyFeaturePolicy::top_k(5);
  long max_rejection_attempts = 1'000'000;
  std::uint64_t seed = 0;

  void validate(Eigen::Index dimension) const;
};

// Failure to find enough opposite-class support points in the box.
class SupportSamplingError : public Error {
 public:
  SupportSamplingError(const std::string& what, double acceptance_rate)
      : Error(what), acceptance_rate_(acceptance_rate) {}
  double acceptance_rate() const { return acceptance_rate_; }

 private:
  double acceptance_rate_;
};

struct SupportPoints {
  Matrix points;
  long attempts = 0;
};

// Rejection-samples `count` points uniformly from `box` whose label under
// `black_box` differs from the label of `x_hat`.
SupportPoints sample_support_points(const Classifier& black_box, const VectorRef& x_hat, const BoundingBox& box,
                                    Eigen::Index count, long max_attempts, std::uint64_t seed);

struct SegmentSplit {
  double t_star = 0.0;
  double info_gain = 0.0;
};

// Exhaustive information-gain search over one segment. `t` must be sorted
// ascending and aligned with `labels`. Candidates are midpoints between
// consecutive distinct positions; ties keep the smallest candidate.
SegmentSplit best_segment_split(std::span<const double> t, std::span<const Label> labels, int num_classes);

// Multi-class Shannon entropy in bits of a label histogram.
double entropy_bits(std::span<const int> counts);

struct TouchpointRecord {
  Vector support_point;
  double t_star = 0.0;
  Vector touchpoint;
  double info_gain = 0.0;
  // The m interior samples, sorted by position, with their labels.
  std::vector<double> segment_t;
  Labels segment_labels;
};

// Draws m positions uniformly on the open segment (x_hat, x_sp), labels them,
// appends both endpoints with their labels and returns the touchpoint.
// nullopt when the segment has zero length.
std::optional<TouchpointRecord> find_touchpoint(const Classifier& black_box, const VectorRef& x_hat,
                                                const VectorRef& x_sp, int m, std::uint64_t seed);

// Same search at caller-supplied interior positions in (0, 1).
std::optional<TouchpointRecord> find_touchpoint_at(const Classifier& black_box, const VectorRef& x_hat,
                                                   const VectorRef& x_sp, std::vector<double> positions);

struct KeyFeature {
  Eigen::Index index = 0;
  std::string name;
  double importance = 0.0;
};

std::vector<KeyFeature> extract_key_features(const VectorRef& importances, std::span<const std::string> names,
                                             const KeyFeaturePolicy& policy);
std::vector<KeyFeature> extract_key_features(const VectorRef& importances, const FeatureSchema& schema,
                                             const KeyFeaturePolicy& policy);

struct ExplainDiagnostics {
  long rejection_attempts = 0;
  int degenerate_segments = 0;
};

struct Explanation {
  Vector instance;
  Label predicted_label = 0;
  DecisionTree surrogate;
  Vector importances;
  std::vector<KeyFeature> key_features;
  std::vector<TouchpointRecord> touchpoints;
  // Hypersphere samples and their black-box labels, in segment order.
  Matrix surrogate_inputs;
  Labels surrogate_labels;
  LadConfig config;
  ExplainDiagnostics diagnostics;

  std::size_t surrogate_train_size() const { return surrogate_labels.size(); }
};

// Local Adversarial Detection for one instance. `feature_names` may be empty,
// in which case features are named "x0", "x1", ...
Explanation explain(const Classifier& black_box, const VectorRef& x_hat, const BoundingBox& box,
                    const LadConfig& config, std::span<const std::string> feature_names = {});

std::vector<std::string> default_feature_names(Eigen::Index dimension);

}  // namespace lad
