#include "report/config_json.hpp"

#include "citysafe/error.hpp"

namespace citysafe::config {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::configuration, msg); }

void expect_object(const Json& j, std::string_view what) {
  if (!j.is_object()) bad(std::string(what) + " must be a JSON object");
}

template <typename T>
T get(const Json& j, const char* key, std::string_view what) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    bad(std::string(what) + "." + key + ": " + e.what());
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out, std::string_view what) {
  if (j.contains(key)) out = get<T>(j, key, what);
}

std::set<std::string> name_set(const Json& j, const char* key) {
  std::set<std::string> out;
  if (!j.contains(key)) return out;
  for (const auto& v : j.at(key)) {
    if (!v.is_string()) bad(std::string("policy.") + key + " must list column names");
    out.insert(v.get<std::string>());
  }
  return out;
}

}  // namespace

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    bad(std::string(what) + " is not valid JSON: " + e.what());
  }
}

Schema schema_from(const Json& j) {
  Schema s;
  auto add = [&](const std::string& name, const Json& kind) {
    if (!kind.is_string()) bad("schema kind for '" + name + "' must be a string");
    const auto k = parse_column_kind(kind.get<std::string>());
    if (!k) bad("schema column '" + name + "' has unknown kind '" + kind.get<std::string>() + "'");
    s.columns.push_back({name, *k});
  };
  if (j.is_array()) {
    for (const auto& c : j) {
      expect_object(c, "schema entry");
      add(get<std::string>(c, "name", "schema"), c.contains("kind") ? c.at("kind") : Json("text"));
    }
  } else if (j.is_object()) {
    for (const auto& [name, kind] : j.items()) add(name, kind);
  } else {
    bad("schema must be an array or an object");
  }
  if (s.columns.empty()) bad("schema declares no columns");
  return s;
}

CleaningPolicy policy_from(const Json& j) {
  CleaningPolicy p;
  if (j.is_null()) return p;
  expect_object(j, "policy");
  p.zero_fill_columns = name_set(j, "zero_fill");
  p.drop_null_columns = name_set(j, "drop_null");
  read(j, "dedup", p.dedup, "policy");
  for (const auto& c : p.zero_fill_columns) {
    if (p.drop_null_columns.count(c)) bad("column '" + c + "' is both zero-filled and dropped on null");
  }
  return p;
}

CategoryRules category_rules_from(const Json& j) {
  CategoryRules r = default_category_rules();
  if (j.is_null()) return r;
  expect_object(j, "category rules");
  if (j.contains("rules")) {
    r.rules.clear();
    for (const auto& e : j.at("rules")) {
      expect_object(e, "category rule");
      r.rules.push_back({get<std::string>(e, "keyword", "rule"), get<std::string>(e, "category", "rule"),
                         get<int>(e, "priority", "rule")});
    }
  }
  if (j.contains("normalizers")) {
    r.normalizers.clear();
    for (const auto& e : j.at("normalizers")) {
      expect_object(e, "normalizer");
      r.normalizers.push_back({get<std::string>(e, "from", "normalizer"), get<std::string>(e, "to", "normalizer")});
    }
  }
  read(j, "default_category", r.default_category, "category rules");
  try {
    r.validate();
  } catch (const Error& e) {
    bad(std::string("category rules: ") + e.what());
  }
  return r;
}

FeatureConfig feature_config_from(const Json& j) {
  FeatureConfig c;
  if (j.is_null()) return c;
  expect_object(j, "features");
  const char* what = "features";
  read(j, "community_column", c.community_column, what);
  read(j, "wattage_column", c.wattage_column, what);
  read(j, "crime_category_column", c.crime_category_column, what);
  read(j, "crime_count_column", c.crime_count_column, what);
  read(j, "disorder_count_column", c.disorder_count_column, what);
  read(j, "pet_species_column", c.pet_species_column, what);
  read(j, "pet_count_column", c.pet_count_column, what);
  read(j, "census_population_column", c.census_population_column, what);
  read(j, "census_male_column", c.census_male_column, what);
  read(j, "census_female_column", c.census_female_column, what);
  read(j, "census_dwelling_column", c.census_dwelling_column, what);
  read(j, "census_apartment_column", c.census_apartment_column, what);
  read(j, "census_passthrough", c.census_passthrough, what);
  return c;
}

model::AnalysisOptions analysis_options_from(const Json& j) {
  model::AnalysisOptions o;
  if (j.is_null()) return o;
  expect_object(j, "model");
  read(j, "alpha", o.alpha, "model");
  read(j, "bins", o.bins, "model");
  read(j, "test_fraction", o.test_fraction, "model");
  read(j, "seed", o.seed, "model");
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) bad("model.alpha must lie in (0, 1)");
  if (o.bins < 2) bad("model.bins must be >= 2");
  if (!(o.test_fraction > 0.0 && o.test_fraction < 1.0)) bad("model.test_fraction must lie in (0, 1)");
  if (j.contains("forest")) {
    const Json& f = j.at("forest");
    expect_object(f, "model.forest");
    const char* what = "model.forest";
    read(f, "n_trees", o.forest.n_trees, what);
    if (f.contains("max_depth") && !f.at("max_depth").is_null()) o.forest.max_depth = get<int>(f, "max_depth", what);
    read(f, "min_leaf", o.forest.min_leaf, what);
    if (f.contains("max_features") && !f.at("max_features").is_null()) {
      o.forest.max_features = get<int>(f, "max_features", what);
    }
    read(f, "bootstrap", o.forest.bootstrap, what);
    read(f, "threads", o.forest.threads, what);
  }
  return o;
}

Schema parse_schema(std::string_view json) { return schema_from(parse_json(json, "schema")); }
CleaningPolicy parse_policy(std::string_view json) { return policy_from(parse_json(json, "policy")); }
CategoryRules parse_category_rules(std::string_view json) {
  return category_rules_from(parse_json(json, "category rules"));
}
FeatureConfig parse_feature_config(std::string_view json) {
  return feature_config_from(parse_json(json, "feature config"));
}
model::AnalysisOptions parse_analysis_options(std::string_view json) {
  return analysis_options_from(parse_json(json, "model options"));
}

}  // namespace citysafe::config
