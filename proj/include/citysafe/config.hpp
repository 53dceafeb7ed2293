#pragma once

#include <string_view>

#include "citysafe/features.hpp"
#include "citysafe/ingest.hpp"
#include "citysafe/model.hpp"

// JSON readers for the pieces a run configuration is made of. All throw
// ErrorCode::configuration on malformed input.
namespace citysafe::config {

/// [{"name": "id", "kind": "integer"}, ...] or {"id": "integer", ...} (order kept).
Schema parse_schema(std::string_view json);

/// {"zero_fill": [...], "drop_null": [...], "dedup": true}
CleaningPolicy parse_policy(std::string_view json);

/// {"rules": [{"keyword", "category", "priority"}], "normalizers": [{"from", "to"}],
///  "default_category": "..."}; absent keys keep the built-in value.
CategoryRules parse_category_rules(std::string_view json);

/// Keys mirror the FeatureConfig field names.
FeatureConfig parse_feature_config(std::string_view json);

/// {"alpha", "bins", "test_fraction", "seed", "forest": {"n_trees", "max_depth",
///  "min_leaf", "max_features", "bootstrap", "threads"}}
model::AnalysisOptions parse_analysis_options(std::string_view json);

}  // namespace citysafe::config
