#include "lad/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lad/random.hpp"

namespace lad {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error("failed writing '" + path + "'");
}

std::uint64_t file_hash(const std::string& path) {
  const std::string bytes = read_file(path);
  return fnv1a64(bytes.data(), bytes.size());
}

Vector encode_json_values(const FeatureSchema& schema, const Json& values) {
  const Eigen::Index d = schema.dimension();
  Vector out(d);
  if (values.is_array()) {
    if (static_cast<Eigen::Index>(values.size()) != d) {
      throw FieldError("values", "expected " + std::to_string(d) + " encoded values, got " + std::to_string(values.size()),
                       true);
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      const Json& v = values[static_cast<std::size_t>(i)];
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        throw FieldError("values[" + std::to_string(i) + "]", "encoded values must be finite numbers");
      }
      out[i] = v.get<double>();
    }
    return out;
  }
  if (!values.is_object()) throw FieldError("values", "values must be an object or an array");
  for (const auto& item : values.items()) {
    if (schema.index_of(item.key()) < 0) throw FieldError(item.key(), "unknown feature '" + item.key() + "'");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    const FeatureMeta& f = schema.feature(i);
    if (!values.contains(f.name)) throw FieldError(f.name, "missing value for feature '" + f.name + "'", true);
    const Json& v = values.at(f.name);
    try {
      if (v.is_string()) {
        out[i] = schema.encode_value(i, v.get<std::string>());
      } else if (v.is_number()) {
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw Error("value for '" + f.name + "' must be finite");
        if (f.is_categorical() && (x != std::floor(x) || x < 0 || x > f.upper)) {
          throw Error("categorical code out of range for '" + f.name + "'");
        }
        out[i] = x;
      } else {
        throw Error("value for '" + f.name + "' must be a string or a number");
      }
    } catch (const FieldError&) {
      throw;
    } catch (const Error& e) {
      throw FieldError(f.name, e.what());
    }
  }
  return out;
}

Json decode_json_values(const FeatureSchema& schema, const VectorRef& encoded) {
  Json out = Json::object();
  const auto raw = schema.decode_row(encoded);
  for (std::size_t i = 0; i < raw.size(); ++i) out[schema.features()[i].name] = raw[i];
  return out;
}

Table load_source(const DataSource& source) {
  if (source.format == "german") return load_table(source.path, german_credit_spec());
  if (source.format == "csv") {
    if (source.schema_path.empty()) throw Error("csv data needs a schema file");
    return load_table(source.path, load_schema_spec(source.schema_path));
  }
  throw Error("unknown data format '" + source.format + "'");
}

std::vector<std::string> Workspace::feature_names() const {
  std::vector<std::string> names;
  for (const auto& f : schema.features()) names.push_back(f.name);
  return names;
}

namespace {

Json source_json(const DataSource& s) {
  Json j{{"path", s.path}, {"format", s.format}};
  if (!s.schema_path.empty()) j["schema_path"] = s.schema_path;
  j["hash"] = hex64(file_hash(s.path));
  return j;
}

DataSource source_from_json(const Json& j) {
  DataSource s;
  s.path = j.at("path").get<std::string>();
  s.format = j.at("format").get<std::string>();
  s.schema_path = j.value("schema_path", std::string());
  return s;
}

// Rebuilds the workspace pieces that depend only on the data and the split.
Workspace assemble(const Table& table, double fraction, std::uint64_t seed, std::shared_ptr<const RandomForest> forest,
                   const FeatureSchema* fitted) {
  Workspace ws;
  auto parts = split(table.data, fraction, seed);
  ws.train = std::move(parts.first);
  ws.test = std::move(parts.second);
  ws.schema = fitted ? *fitted : table.schema.with_fitted_bounds(ws.train.instances);
  ws.forest = std::move(forest);
  ws.scaled = std::make_shared<ScaledClassifier>(ws.forest, MinMaxScaler(ws.schema));
  ws.support_box = bounding_box(ws.scaled->scaler().scale(table.data.instances));
  return ws;
}

}  // namespace

TrainResult train_model(const TrainOptions& options) {
  if (options.trees < 1) throw Error("--trees must be >= 1");
  const Table table = load_source(options.data);
  auto parts = split(table.data, options.split, options.seed);

  ForestParams params;
  params.n_trees = options.trees;
  params.tree_params.max_depth = options.max_depth;
  params.tree_params.min_samples_leaf = options.min_samples_leaf;
  auto forest = std::make_shared<const RandomForest>(train_forest(parts.first, params, options.seed));

  TrainResult out;
  out.workspace = assemble(table, options.split, options.seed, forest, nullptr);
  Workspace& ws = out.workspace;

  ws.manifest = Json{{"tool_version", kToolVersion},
                     {"dataset", source_json(options.data)},
                     {"split",
                      {{"fraction", options.split},
                       {"seed", options.seed},
                       {"stratified", true},
                       {"train_size", ws.train.size()},
                       {"test_size", ws.test.size()}}},
                     {"model",
                      {{"kind", "random_forest"},
                       {"n_trees", forest->n_trees()},
                       {"tree", to_json(forest->params().tree_params)},
                       {"bootstrap", forest->params().bootstrap},
                       {"seed", options.seed}}}};

  out.model = forest_to_json(*forest, ws.schema);
  out.model["schema"] = to_json(ws.schema);
  out.model["manifest"] = ws.manifest;

  const double train_acc = accuracy(*forest, ws.train);
  const double test_acc = accuracy(*forest, ws.test);
  std::vector<int> counts(static_cast<std::size_t>(std::max(1, ws.test.num_classes())), 0);
  for (Label l : ws.test.labels) ++counts[static_cast<std::size_t>(l)];
  double majority = 0.0;
  for (int c : counts) majority = std::max(majority, static_cast<double>(c));
  majority /= static_cast<double>(std::max<Eigen::Index>(1, ws.test.size()));
  out.metrics = Json{{"train_accuracy", train_acc},
                     {"test_accuracy", test_acc},
                     {"test_majority_rate", majority},
                     {"train_size", ws.train.size()},
                     {"test_size", ws.test.size()},
                     {"manifest", ws.manifest}};
  return out;
}

Workspace load_workspace(const Json& doc) {
  auto forest = std::make_shared<const RandomForest>(forest_from_json(doc));
  const FeatureSchema schema = schema_from_json(doc.at("schema"));
  if (hex64(schema.hash()) != doc.at("schema_hash").get<std::string>()) {
    throw Error("model schema hash does not match its schema");
  }
  if (schema.dimension() != forest->dimension()) throw Error("model schema dimension differs from its trees");
  const Json& manifest = doc.at("manifest");
  const DataSource source = source_from_json(manifest.at("dataset"));
  const std::string expected = manifest.at("dataset").at("hash").get<std::string>();
  if (hex64(file_hash(source.path)) != expected) {
    throw Error("dataset '" + source.path + "' changed since the model was trained");
  }
  const Table table = load_source(source);
  if (table.schema.hash() != schema.hash()) throw Error("dataset schema differs from the model schema");
  const auto& sp = manifest.at("split");
  Workspace ws = assemble(table, sp.at("fraction").get<double>(), sp.at("seed").get<std::uint64_t>(), forest, &schema);
  ws.manifest = manifest;
  return ws;
}

Workspace load_workspace_file(const std::string& model_path) {
  Json doc;
  try {
    doc = Json::parse(read_file(model_path));
  } catch (const Json::exception& e) {
    throw Error("model file '" + model_path + "': " + e.what());
  }
  Workspace ws = load_workspace(doc);
  ws.manifest["model"]["path"] = model_path;
  return ws;
}

Explanation explain_encoded(const Workspace& ws, const VectorRef& encoded, const LadConfig& config) {
  const Vector scaled = ws.scaled->scaler().scale(encoded);
  const BoundingBox box = ws.support_box.expanded_to(scaled);
  return explain(*ws.scaled, scaled, box, config, ws.feature_names());
}

Json explanation_report(const Workspace& ws, const Explanation& ex, const VectorRef& encoded,
                        const std::string& instance_id) {
  Json j = to_json(ex, instance_id, ws.feature_names(), ws.schema.class_names());
  j["values"] = decode_json_values(ws.schema, encoded);
  Json manifest = ws.manifest;
  manifest["lad"] = to_json(ex.config);
  j["manifest"] = std::move(manifest);
  return j;
}

FidelityRun run_fidelity(const Workspace& ws, const FidelityConfig& fidelity, const LadConfig& lad,
                         const AugmentConfig& augment) {
  const Matrix test = ws.scaled_test();
  if (test.rows() == 0) throw Error("empty test set");
  const Matrix train = ws.scaled_train();
  const Matrix seed_set = draw_seed_set(train, std::min<Eigen::Index>(augment.seed_set_size, train.rows()), augment.seed);
  auto substitute = std::make_shared<const Substitute>(train_substitute(*ws.scaled, seed_set, augment, ws.support_box));

  const auto names = ws.feature_names();
  LocalSurrogateFactory factory = [&](const Vector& x_hat, std::size_t index) -> std::shared_ptr<const Classifier> {
    LadConfig cfg = lad;
    cfg.seed = derive_seed(lad.seed, index);
    const BoundingBox box = ws.support_box.expanded_to(x_hat);
    auto ex = explain(*ws.scaled, x_hat, box, cfg, names);
    return std::make_shared<const DecisionTree>(std::move(ex.surrogate));
  };
  auto [local, global] = fidelity_sweep(*ws.scaled, factory, *substitute, test, fidelity);
  return {std::move(local), std::move(global), to_json(*substitute)};
}

Json fidelity_summary(const Workspace& ws, const FidelityRun& run, const LadConfig& lad, const AugmentConfig& augment) {
  Json manifest = ws.manifest;
  manifest["lad"] = to_json(lad);
  manifest["fidelity"] = to_json(run.lad.config);
  manifest["substitute"] = to_json(augment);
  return Json{{"schema_version", kFidelityFormatVersion},
              {"test_set_size", ws.test.size()},
              {"reports", Json::array({to_json(run.lad), to_json(run.global)})},
              {"substitute", run.substitute},
              {"manifest", std::move(manifest)}};
}

}  // namespace lad
