#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lad/dataset.hpp"
#include "lad/explain.hpp"
#include "lad/fidelity.hpp"
#include "lad/forest.hpp"
#include "lad/substitute.hpp"

namespace lad {

using Json = nlohmann::ordered_json;

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kExplanationFormatVersion = 1;
inline constexpr int kFidelityFormatVersion = 1;

std::string hex64(std::uint64_t value);

Json to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const Json& j);

Json to_json(const TreeParams& params);
TreeParams tree_params_from_json(const Json& j);

Json to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const Json& j);

// {version, schema_hash, params, trees: [{nodes: [...]}]}
Json forest_to_json(const RandomForest& forest, const FeatureSchema& schema);
RandomForest forest_from_json(const Json& j);

Json to_json(const LadConfig& config);
LadConfig lad_config_from_json(const Json& j, LadConfig defaults = {});

// `feature_names` defaults to x0, x1, ...; `class_names` to the label codes.
Json to_json(const Explanation& ex, const std::string& instance_id, std::span<const std::string> feature_names = {},
             std::span<const std::string> class_names = {});

Json to_json(const FidelityConfig& config);
Json to_json(const FidelityReport& report);
// Tidy rows: instance_id, method, radius_fraction, fidelity.
std::string fidelity_csv(const std::vector<FidelityReport>& reports);

Json to_json(const AugmentConfig& config);
Json to_json(const Substitute& substitute);
LinearSoftmax substitute_from_json(const Json& j);

}  // namespace lad
