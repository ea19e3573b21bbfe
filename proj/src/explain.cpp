#include "lad/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lad/random.hpp"
#include "lad/sampling.hpp"

namespace lad {

namespace {

constexpr double kGainTolerance = 1e-12;

}  // namespace

void LadConfig::validate(Eigen::Index dimension) const {
  if (n_support < 1 || m_segment < 1 || p_sphere < 1) throw Error("N, M and P must be >= 1");
  if (!(sphere_radius > 0.0)) throw Error("sphere radius must be positive");
  if (max_rejection_attempts < 1) throw Error("max_rejection_attempts must be >= 1");
  if (key_feature_policy.kind == KeyFeaturePolicy::Kind::kTopK) {
    if (key_feature_policy.k < 1 || key_feature_policy.k > dimension) throw Error("top-k must lie in [1, D]");
  } else if (!(key_feature_policy.threshold > 0.0 && key_feature_policy.threshold <= 1.0)) {
    throw Error("importance threshold must lie in (0, 1]");
  }
  surrogate_params.validate(dimension);
}

SupportPoints sample_support_points(const Classifier& black_box, const VectorRef& x_hat, const BoundingBox& box,
                                    Eigen::Index count, long max_attempts, std::uint64_t seed) {
  if (box.dimension() != x_hat.size()) throw DimensionError("box dimension differs from instance");
  if (box.degenerate()) throw Error("support box is degenerate in every dimension");
  const Label own = black_box.predict(x_hat);
  Rng rng(seed);
  SupportPoints out;
  out.points.resize(count, x_hat.size());
  Eigen::Index accepted = 0;
  while (accepted < count) {
    if (out.attempts >= max_attempts) {
      const double rate = static_cast<double>(accepted) / static_cast<double>(out.attempts);
      std::ostringstream msg;
      msg << "accepted " << accepted << " of " << count << " support points in " << out.attempts
          << " draws (acceptance rate " << rate << "); the classifier looks constant over the box";
      throw SupportSamplingError(msg.str(), rate);
    }
    ++out.attempts;
    Vector candidate = box.sample(rng);
    if (black_box.predict(candidate) != own) out.points.row(accepted++) = candidate.transpose();
  }
  return out;
}

double entropy_bits(std::span<const int> counts) { return impurity(counts, Criterion::kEntropy); }

SegmentSplit best_segment_split(std::span<const double> t, std::span<const Label> labels, int num_classes) {
  if (t.size() != labels.size()) throw Error("positions and labels differ in length");
  if (t.size() < 2) throw Error("a segment split needs at least two samples");
  std::vector<int> total(static_cast<std::size_t>(num_classes), 0);
  for (Label l : labels) ++total.at(static_cast<std::size_t>(l));
  const double parent = entropy_bits(total);
  const double n = static_cast<double>(t.size());

  std::vector<int> left(total.size(), 0);
  std::vector<int> right = total;
  SegmentSplit best{-1.0, -1.0};
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    ++left[static_cast<std::size_t>(labels[k])];
    --right[static_cast<std::size_t>(labels[k])];
    if (!(t[k] < t[k + 1])) continue;
    const double n_left = static_cast<double>(k + 1);
    const double gain = parent - (n_left / n) * entropy_bits(left) - ((n - n_left) / n) * entropy_bits(right);
    if (best.t_star < 0.0 || gain > best.info_gain + kGainTolerance) {
      best = {t[k] + (t[k + 1] - t[k]) / 2.0, gain};
    }
  }
  if (best.t_star < 0.0) throw Error("segment positions are all identical");
  best.info_gain = std::max(best.info_gain, 0.0);
  return best;
}

std::optional<TouchpointRecord> find_touchpoint_at(const Classifier& black_box, const VectorRef& x_hat,
                                                   const VectorRef& x_sp, std::vector<double> positions) {
  if (x_sp.size() != x_hat.size()) throw DimensionError("support point dimension differs from instance");
  const Label own = black_box.predict(x_hat);
  const Label other = black_box.predict(x_sp);
  if (own == other) throw Error("support point shares the label of the instance");
  const Vector direction = x_sp - x_hat;
  if (direction.norm() == 0.0) return std::nullopt;

  std::sort(positions.begin(), positions.end());
  TouchpointRecord rec;
  rec.support_point = x_sp;
  rec.segment_labels.reserve(positions.size());
  for (double t : positions) {
    if (!(t > 0.0 && t < 1.0)) throw Error("segment positions must lie in (0, 1)");
    rec.segment_labels.push_back(black_box.predict(x_hat + t * direction));
  }
  rec.segment_t = std::move(positions);

  std::vector<double> t;
  Labels labels;
  t.reserve(rec.segment_t.size() + 2);
  labels.reserve(rec.segment_t.size() + 2);
  t.push_back(0.0);
  labels.push_back(own);
  t.insert(t.end(), rec.segment_t.begin(), rec.segment_t.end());
  labels.insert(labels.end(), rec.segment_labels.begin(), rec.segment_labels.end());
  t.push_back(1.0);
  labels.push_back(other);

  const SegmentSplit split = best_segment_split(t, labels, black_box.num_classes());
  rec.t_star = split.t_star;
  rec.info_gain = split.info_gain;
  rec.touchpoint = x_hat + split.t_star * direction;
  return rec;
}

std::optional<TouchpointRecord> find_touchpoint(const Classifier& black_box, const VectorRef& x_hat,
                                                const VectorRef& x_sp, int m, std::uint64_t seed) {
  if (m < 1) throw Error("segment sample count must be >= 1");
  Rng rng(seed);
  std::vector<double> positions(static_cast<std::size_t>(m));
  for (auto& t : positions) t = uniform_open01(rng);
  return find_touchpoint_at(black_box, x_hat, x_sp, std::move(positions));
}

std::vector<KeyFeature> extract_key_features(const VectorRef& importances, std::span<const std::string> names,
                                             const KeyFeaturePolicy& policy) {
  if (static_cast<Eigen::Index>(names.size()) != importances.size()) {
    throw DimensionError("feature names and importances differ in length");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(importances.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return importances[a] > importances[b]; });

  std::vector<KeyFeature> out;
  for (Eigen::Index i : order) {
    const double v = importances[i];
    if (!(v > 0.0)) break;
    if (policy.kind == KeyFeaturePolicy::Kind::kTopK) {
      if (static_cast<int>(out.size()) >= policy.k) break;
    } else if (v < policy.threshold) {
      break;
    }
    out.push_back({i, names[static_cast<std::size_t>(i)], v});
  }
  return out;
}

std::vector<KeyFeature> extract_key_features(const VectorRef& importances, const FeatureSchema& schema,
                                             const KeyFeaturePolicy& policy) {
  std::vector<std::string> names;
  for (const auto& f : schema.features()) names.push_back(f.name);
  return extract_key_features(importances, names, policy);
}

std::vector<std::string> default_feature_names(Eigen::Index dimension) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < dimension; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

Explanation explain(const Classifier& black_box, const VectorRef& x_hat, const BoundingBox& box,
                    const LadConfig& config, std::span<const std::string> feature_names) {
  const Eigen::Index d = x_hat.size();
  if (d != black_box.dimension()) throw DimensionError("instance dimension differs from the classifier");
  config.validate(d);
  if (!box.contains(x_hat)) throw Error("instance lies outside the sampling box");
  std::vector<std::string> names(feature_names.begin(), feature_names.end());
  if (names.empty()) names = default_feature_names(d);

  Explanation ex;
  ex.instance = x_hat;
  ex.predicted_label = black_box.predict(x_hat);
  ex.config = config;

  const SupportPoints support =
      sample_support_points(black_box, x_hat, box, config.n_support, config.max_rejection_attempts,
                            derive_seed(config.seed, Stream::kSupport, 0));
  ex.diagnostics.rejection_attempts = support.attempts;

  const auto p = static_cast<Eigen::Index>(config.p_sphere);
  std::vector<Matrix> spheres;
  spheres.reserve(static_cast<std::size_t>(config.n_support));
  for (Eigen::Index i = 0; i < support.points.rows(); ++i) {
    const auto index = static_cast<std::uint64_t>(i);
    auto rec = find_touchpoint(black_box, x_hat, support.points.row(i).transpose(), config.m_segment,
                               derive_seed(config.seed, Stream::kSegment, index));
    if (!rec) {
      ++ex.diagnostics.degenerate_segments;
      continue;
    }
    spheres.push_back(sample_hypersphere(rec->touchpoint, config.sphere_radius, p,
                                         derive_seed(config.seed, Stream::kSphere, index), box));
    ex.touchpoints.push_back(std::move(*rec));
  }

  ex.surrogate_inputs.resize(static_cast<Eigen::Index>(spheres.size()) * p, d);
  for (std::size_t s = 0; s < spheres.size(); ++s) {
    ex.surrogate_inputs.middleRows(static_cast<Eigen::Index>(s) * p, p) = spheres[s];
  }
  ex.surrogate_labels = black_box.predict_batch(ex.surrogate_inputs);
  const bool single_class =
      std::adjacent_find(ex.surrogate_labels.begin(), ex.surrogate_labels.end(), std::not_equal_to<>()) ==
      ex.surrogate_labels.end();
  if (single_class) throw Error("no local boundary captured; increase r_sx or P");

  std::vector<std::size_t> rows(ex.surrogate_labels.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  ex.surrogate = train_tree(ex.surrogate_inputs, ex.surrogate_labels, rows, black_box.num_classes(),
                            config.surrogate_params, derive_seed(config.seed, Stream::kSurrogate, 0));
  ex.importances = tree_feature_importances(ex.surrogate);
  ex.key_features = extract_key_features(ex.importances, names, config.key_feature_policy);
  return ex;
}

}  // namespace lad
