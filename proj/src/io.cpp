#include "lad/io.hpp"

#include <cstdio>
#include <sstream>

namespace lad {

namespace {

std::vector<double> to_std(const VectorRef& v) { return {v.data(), v.data() + v.size()}; }

Vector to_vector(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

const char* criterion_name(Criterion c) { return c == Criterion::kGini ? "gini" : "entropy"; }

}  // namespace

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

Json to_json(const FeatureSchema& schema) {
  Json features = Json::array();
  for (const auto& f : schema.features()) {
    Json jf{{"name", f.name}, {"kind", f.is_categorical() ? "categorical" : "numeric"}};
    if (f.is_categorical()) jf["levels"] = f.levels;
    jf["lower"] = f.lower;
    jf["upper"] = f.upper;
    features.push_back(std::move(jf));
  }
  return Json{{"features", std::move(features)}, {"classes", schema.class_names()}};
}

FeatureSchema schema_from_json(const Json& j) {
  std::vector<FeatureMeta> metas;
  for (const auto& jf : j.at("features")) {
    FeatureMeta f;
    f.name = jf.at("name").get<std::string>();
    f.kind = jf.at("kind").get<std::string>() == "categorical" ? FeatureKind::kCategorical : FeatureKind::kNumeric;
    if (jf.contains("levels")) f.levels = jf.at("levels").get<std::vector<std::string>>();
    f.lower = jf.at("lower").get<double>();
    f.upper = jf.at("upper").get<double>();
    metas.push_back(std::move(f));
  }
  return FeatureSchema(std::move(metas), j.value("classes", std::vector<std::string>{}));
}

Json to_json(const TreeParams& params) {
  Json j;
  j["max_depth"] = params.max_depth ? Json(*params.max_depth) : Json(nullptr);
  j["min_samples_leaf"] = params.min_samples_leaf;
  j["criterion"] = criterion_name(params.criterion);
  j["random_feature_subset"] = params.random_feature_subset ? Json(*params.random_feature_subset) : Json(nullptr);
  return j;
}

TreeParams tree_params_from_json(const Json& j) {
  TreeParams p;
  if (j.contains("max_depth") && !j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_leaf = j.value("min_samples_leaf", 1);
  const auto crit = j.value("criterion", std::string("gini"));
  if (crit == "entropy") {
    p.criterion = Criterion::kEntropy;
  } else if (crit != "gini") {
    throw Error("unknown criterion '" + crit + "'");
  }
  if (j.contains("random_feature_subset") && !j.at("random_feature_subset").is_null()) {
    p.random_feature_subset = j.at("random_feature_subset").get<int>();
  }
  return p;
}

Json to_json(const DecisionTree& tree) {
  Json nodes = Json::array();
  for (const auto& n : tree.nodes()) {
    Json jn;
    if (!n.is_leaf()) {
      jn["feature"] = n.feature;
      jn["threshold"] = n.threshold;
      jn["left"] = n.left;
      jn["right"] = n.right;
    }
    jn["label"] = n.label;
    jn["counts"] = n.class_counts;
    nodes.push_back(std::move(jn));
  }
  return Json{{"dimension", tree.dimension()},
              {"num_classes", tree.num_classes()},
              {"impurity_decrease", to_std(tree.impurity_decrease())},
              {"nodes", std::move(nodes)}};
}

DecisionTree tree_from_json(const Json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    if (jn.contains("feature")) {
      n.feature = jn.at("feature").get<int>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<int>();
      n.right = jn.at("right").get<int>();
    }
    n.label = jn.at("label").get<Label>();
    n.class_counts = jn.at("counts").get<std::vector<int>>();
    nodes.push_back(std::move(n));
  }
  return DecisionTree(std::move(nodes), j.at("dimension").get<Eigen::Index>(), j.at("num_classes").get<int>(),
                      to_vector(j.at("impurity_decrease")));
}

Json forest_to_json(const RandomForest& forest, const FeatureSchema& schema) {
  Json trees = Json::array();
  for (const auto& t : forest.trees()) trees.push_back(to_json(t));
  const auto& p = forest.params();
  return Json{{"version", kModelFormatVersion},
              {"schema_hash", hex64(schema.hash())},
              {"params",
               {{"n_trees", p.n_trees},
                {"bootstrap", p.bootstrap},
                {"subsample_features", p.subsample_features},
                {"tree", to_json(p.tree_params)}}},
              {"seed", forest.seed()},
              {"trees", std::move(trees)}};
}

RandomForest forest_from_json(const Json& j) {
  const int version = j.at("version").get<int>();
  if (version != kModelFormatVersion) throw Error("unsupported model format version " + std::to_string(version));
  ForestParams p;
  const auto& jp = j.at("params");
  p.n_trees = jp.at("n_trees").get<int>();
  p.bootstrap = jp.at("bootstrap").get<bool>();
  p.subsample_features = jp.at("subsample_features").get<bool>();
  p.tree_params = tree_params_from_json(jp.at("tree"));
  std::vector<DecisionTree> trees;
  for (const auto& jt : j.at("trees")) trees.push_back(tree_from_json(jt));
  if (static_cast<int>(trees.size()) != p.n_trees) throw Error("model lists a different number of trees");
  return RandomForest(std::move(trees), p, j.at("seed").get<std::uint64_t>());
}

Json to_json(const LadConfig& c) {
  Json policy;
  if (c.key_feature_policy.kind == KeyFeaturePolicy::Kind::kTopK) {
    policy = {{"kind", "top_k"}, {"k", c.key_feature_policy.k}};
  } else {
    policy = {{"kind", "threshold"}, {"threshold", c.key_feature_policy.threshold}};
  }
  return Json{{"n_support", c.n_support},
              {"m_segment", c.m_segment},
              {"p_sphere", c.p_sphere},
              {"sphere_radius", c.sphere_radius},
              {"surrogate", to_json(c.surrogate_params)},
              {"key_feature_policy", std::move(policy)},
              {"max_rejection_attempts", c.max_rejection_attempts},
              {"seed", c.seed}};
}

LadConfig lad_config_from_json(const Json& j, LadConfig c) {
  if (!j.is_object()) throw Error("config must be a JSON object");
  c.n_support = j.value("n_support", c.n_support);
  c.m_segment = j.value("m_segment", c.m_segment);
  c.p_sphere = j.value("p_sphere", c.p_sphere);
  c.sphere_radius = j.value("sphere_radius", c.sphere_radius);
  c.max_rejection_attempts = j.value("max_rejection_attempts", c.max_rejection_attempts);
  c.seed = j.value("seed", c.seed);
  if (j.contains("surrogate")) c.surrogate_params = tree_params_from_json(j.at("surrogate"));
  if (j.contains("max_depth")) c.surrogate_params.max_depth = j.at("max_depth").get<int>();
  if (j.contains("top_k")) c.key_feature_policy = KeyFeaturePolicy::top_k(j.at("top_k").get<int>());
  if (j.contains("threshold")) c.key_feature_policy = KeyFeaturePolicy::at_least(j.at("threshold").get<double>());
  if (j.contains("key_feature_policy")) {
    const auto& p = j.at("key_feature_policy");
    const auto kind = p.at("kind").get<std::string>();
    if (kind == "top_k") {
      c.key_feature_policy = KeyFeaturePolicy::top_k(p.at("k").get<int>());
    } else if (kind == "threshold") {
      c.key_feature_policy = KeyFeaturePolicy::at_least(p.at("threshold").get<double>());
    } else {
      throw Error("unknown key feature policy '" + kind + "'");
    }
  }
  return c;
}

Json to_json(const Explanation& ex, const std::string& instance_id, std::span<const std::string> feature_names,
             std::span<const std::string> class_names) {
  std::vector<std::string> names(feature_names.begin(), feature_names.end());
  if (names.empty()) names = default_feature_names(ex.importances.size());

  Json importances = Json::array();
  for (Eigen::Index i = 0; i < ex.importances.size(); ++i) {
    importances.push_back({{"feature", names.at(static_cast<std::size_t>(i))}, {"value", ex.importances[i]}});
  }
  Json key = Json::array();
  for (const auto& k : ex.key_features) {
    key.push_back({{"feature", names.at(static_cast<std::size_t>(k.index))}, {"index", k.index}, {"importance", k.importance}});
  }
  double mean_t = 0.0;
  double mean_gain = 0.0;
  for (const auto& t : ex.touchpoints) {
    mean_t += t.t_star;
    mean_gain += t.info_gain;
  }
  if (!ex.touchpoints.empty()) {
    mean_t /= static_cast<double>(ex.touchpoints.size());
    mean_gain /= static_cast<double>(ex.touchpoints.size());
  }
  Json j{{"schema_version", kExplanationFormatVersion},
         {"instance_id", instance_id},
         {"predicted_label", ex.predicted_label}};
  if (static_cast<std::size_t>(ex.predicted_label) < class_names.size()) {
    j["predicted_class"] = class_names[static_cast<std::size_t>(ex.predicted_label)];
  }
  j["instance"] = to_std(ex.instance);
  j["importances"] = std::move(importances);
  j["key_features"] = std::move(key);
  j["config"] = to_json(ex.config);
  j["seed"] = ex.config.seed;
  j["diagnostics"] = {{"rejection_attempts", ex.diagnostics.rejection_attempts},
                      {"degenerate_segments", ex.diagnostics.degenerate_segments}};
  j["touchpoint_summary"] = {{"count", ex.touchpoints.size()}, {"mean_t_star", mean_t}, {"mean_info_gain", mean_gain}};
  j["surrogate"] = {{"train_size", ex.surrogate_train_size()},
                    {"depth", ex.surrogate.depth()},
                    {"nodes", ex.surrogate.nodes().size()}};
  return j;
}

Json to_json(const FidelityConfig& c) {
  return Json{{"n_eval", c.n_eval}, {"radii", c.radii}, {"seed", c.seed}, {"limit", c.limit}};
}

Json to_json(const FidelityReport& r) {
  Json per_instance = Json::array();
  for (const auto& inst : r.instances) {
    per_instance.push_back({{"instance_id", inst.instance_id}, {"fidelity", inst.values}});
  }
  Json failures = Json::array();
  for (const auto& f : r.failures) failures.push_back({{"instance_id", f.instance_id}, {"message", f.message}});
  return Json{{"schema_version", kFidelityFormatVersion},
              {"method", r.method},
              {"config", to_json(r.config)},
              {"radius_fractions", r.config.radii},
              {"mean", r.mean},
              {"stddev", r.stddev},
              {"evaluated", r.instances.size()},
              {"failed", r.failures.size()},
              {"failures", std::move(failures)},
              {"instances", std::move(per_instance)}};
}

std::string fidelity_csv(const std::vector<FidelityReport>& reports) {
  std::ostringstream os;
  os.precision(17);
  os << "instance_id,method,radius_fraction,fidelity\n";
  for (const auto& r : reports) {
    for (const auto& inst : r.instances) {
      for (std::size_t k = 0; k < r.config.radii.size(); ++k) {
        os << inst.instance_id << ',' << r.method << ',' << r.config.radii[k] << ',' << inst.values[k] << '\n';
      }
    }
  }
  return os.str();
}

Json to_json(const AugmentConfig& c) {
  return Json{{"seed_set_size", c.seed_set_size}, {"rho", c.rho},
              {"lambda", c.lambda},               {"learning_rate", c.learning_rate},
              {"iterations", c.iterations},       {"seed", c.seed}};
}

Json to_json(const Substitute& s) {
  const auto& m = s.model();
  Json w = Json::array();
  for (Eigen::Index c = 0; c < m.weights().rows(); ++c) w.push_back(to_std(m.weights().row(c).transpose()));
  return Json{{"architecture", "linear_softmax"},
              {"W", std::move(w)},
              {"bias", to_std(m.bias())},
              {"config", to_json(s.config())},
              {"training_set_size", s.training_set().rows()}};
}

LinearSoftmax substitute_from_json(const Json& j) {
  const auto rows = j.at("W").get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw Error("substitute has no weight rows");
  Matrix w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    if (rows[c].size() != rows.front().size()) throw Error("ragged substitute weights");
    for (std::size_t k = 0; k < rows[c].size(); ++k) w(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = rows[c][k];
  }
  return LinearSoftmax(std::move(w), to_vector(j.at("bias")));
}

}  // namespace lad
