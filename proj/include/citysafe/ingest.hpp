#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "citysafe/table.hpp"

namespace citysafe {

/// Declared column kinds, keyed by header name.
struct Schema {
  std::vector<Column> columns;

  const Column* find(std::string_view name) const;
};

/// Splits RFC-4180 CSV into records of raw fields. Quoted fields may contain
/// commas, doubled quotes and newlines. A trailing newline does not produce
/// an empty record; CRLF line ends are accepted.
std::vector<std::vector<std::string>> split_csv(std::string_view text);

/// Parses CSV text with a header row into a Dataset. Cells that do not parse
/// under their declared kind become null. Columns keep header order.
/// Throws ErrorCode::empty_dataset on empty input and ErrorCode::schema when a
/// header column is undeclared, a declared column is missing, or a record has
/// the wrong number of fields.
Dataset parse_table(std::string_view csv, const Schema& schema, std::string name = {});

/// Header row plus one line per row; fields are quoted only when needed.
std::string serialize_table(const Dataset& d);

/// Keeps the first occurrence of every row; rows are compared byte-wise on
/// their trimmed text form.
Dataset drop_duplicates(const Dataset& d);

struct CleaningPolicy {
  std::set<std::string> zero_fill_columns;
  std::set<std::string> drop_null_columns;
  bool dedup = true;
};

/// Zero-fills and drops rows per `policy`. Throws ErrorCode::configuration for
/// unknown columns or when the two column sets intersect.
Dataset impute_missing(const Dataset& d, const CleaningPolicy& policy);

/// Dedup (when enabled) followed by imputation.
Dataset apply_policy(const Dataset& d, const CleaningPolicy& policy);

struct CategoryRule {
  std::string keyword;  // lowercase
  std::string category;
  int priority = 0;     // lower value wins
};

/// Text substitutions applied (case-insensitively, on word boundaries) to a
/// description before rule matching, e.g. "two" -> "2".
struct Normalizer {
  std::string from;
  std::string to;
};

struct CategoryRules {
  std::vector<CategoryRule> rules;
  std::vector<Normalizer> normalizers;
  std::string default_category = "Traffic Incident";

  /// Throws ErrorCode::configuration on an empty list or duplicate priorities.
  void validate() const;
};

/// Built-in keyword list for traffic-incident descriptions.
const CategoryRules& default_category_rules();

/// Category of the highest-priority rule whose keyword occurs in the
/// normalized, lowercased description; the default label otherwise.
std::string map_incident_category(std::string_view description, const CategoryRules& rules);

/// Adds (or overwrites) `category_column` with the mapped category of
/// `description_column`. Null descriptions map to the default label.
Dataset categorize(const Dataset& d, std::string_view description_column,
                   std::string_view category_column, const CategoryRules& rules);

}  // namespace citysafe
