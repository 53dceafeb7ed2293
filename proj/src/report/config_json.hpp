#pragma once

// JSON-typed forms of the config readers, shared by the pipeline and the C API.

#include "citysafe/config.hpp"
#include "json.hpp"

namespace citysafe::config {

using Json = nlohmann::ordered_json;

Json parse_json(std::string_view text, std::string_view what);

Schema schema_from(const Json& j);
CleaningPolicy policy_from(const Json& j);
CategoryRules category_rules_from(const Json& j);
FeatureConfig feature_config_from(const Json& j);
model::AnalysisOptions analysis_options_from(const Json& j);

}  // namespace citysafe::config
