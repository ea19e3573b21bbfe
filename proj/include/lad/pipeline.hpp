#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "lad/dataset.hpp"
#include "lad/explain.hpp"
#include "lad/fidelity.hpp"
#include "lad/forest.hpp"
#include "lad/io.hpp"
#include "lad/substitute.hpp"

namespace lad {

inline constexpr const char* kToolVersion = "0.1.0";

struct DataSource {
  std::string path;
  // "german" (UCI german.data) or "csv" (header row plus sidecar schema).
  std::string format = "german";
  std::string schema_path;
};

struct TrainOptions {
  DataSource data;
  int trees = 200;
  double split = 0.7;
  std::uint64_t seed = 7;
  std::optional<int> max_depth;
  int min_samples_leaf = 1;
};

// Everything needed to query and explain a trained black box. Geometry
// (sampling, radii, the support box) lives in the min-max scaled space
// defined by bounds fitted on the training split.
struct Workspace {
  FeatureSchema schema;
  std::shared_ptr<const RandomForest> forest;
  std::shared_ptr<const ScaledClassifier> scaled;
  LabeledSet train;
  LabeledSet test;
  // Scaled bounding box of the whole table.
  BoundingBox support_box;
  Json manifest;

  std::vector<std::string> feature_names() const;
  Matrix scaled_test() const { return scaled->scaler().scale(test.instances); }
  Matrix scaled_train() const { return scaled->scaler().scale(train.instances); }
};

Table load_source(const DataSource& source);
std::uint64_t file_hash(const std::string& path);

struct TrainResult {
  Workspace workspace;
  Json model;    // persisted model document
  Json metrics;  // accuracy summary
};

TrainResult train_model(const TrainOptions& options);

// Reloads a model document and rebuilds the split it was trained on.
Workspace load_workspace(const Json& model_document);
Workspace load_workspace_file(const std::string& model_path);

// `encoded` is in the schema's encoded (unscaled) space.
Explanation explain_encoded(const Workspace& ws, const VectorRef& encoded, const LadConfig& config);
Json explanation_report(const Workspace& ws, const Explanation& ex, const VectorRef& encoded,
                        const std::string& instance_id);

struct FidelityRun {
  FidelityReport lad;
  FidelityReport global;
  Json substitute;
};

FidelityRun run_fidelity(const Workspace& ws, const FidelityConfig& fidelity, const LadConfig& lad,
                         const AugmentConfig& augment);
Json fidelity_summary(const Workspace& ws, const FidelityRun& run, const LadConfig& lad, const AugmentConfig& augment);

// A request value that cannot be encoded. `missing_dimension` marks a
// wrong-length or incomplete row as opposed to a malformed value.
class FieldError : public Error {
 public:
  FieldError(std::string field, const std::string& what, bool missing_dimension = false)
      : Error(what), field_(std::move(field)), missing_dimension_(missing_dimension) {}
  const std::string& field() const { return field_; }
  bool missing_dimension() const { return missing_dimension_; }

 private:
  std::string field_;
  bool missing_dimension_;
};

// Encodes {feature: raw value} (level strings, numbers or numeric strings)
// or an already encoded array of D numbers.
Vector encode_json_values(const FeatureSchema& schema, const Json& values);
Json decode_json_values(const FeatureSchema& schema, const VectorRef& encoded);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace lad
