#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citysafe/geocode.hpp"
#include "citysafe/table.hpp"

namespace citysafe {

/// Named numeric column of a community table; null entries are std::nullopt.
struct FeatureColumn {
  std::string name;
  std::vector<std::optional<double>> values;

  bool operator==(const FeatureColumn&) const = default;
};

/// One row per community, numeric indicator columns.
class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(std::vector<std::string> communities);

  const std::vector<std::string>& communities() const { return communities_; }
  const std::vector<FeatureColumn>& columns() const { return columns_; }
  std::size_t row_count() const { return communities_.size(); }

  /// Adds a column; throws ErrorCode::internal on length mismatch or a
  /// duplicate name.
  void add_column(std::string name, std::vector<std::optional<double>> values);

  const FeatureColumn* find(std::string_view name) const;
  /// Throws ErrorCode::unknown_metric listing the available columns.
  const FeatureColumn& column(std::string_view name) const;
  std::vector<std::string> column_names() const;

  std::optional<std::size_t> row_of(std::string_view community) const;

  bool operator==(const FeatureTable&) const = default;

 private:
  std::vector<std::string> communities_;
  std::vector<FeatureColumn> columns_;
};

/// CSV with community_name first; nulls are empty cells.
std::string feature_table_to_csv(const FeatureTable& t);
/// Inverse of feature_table_to_csv. Throws ErrorCode::schema.
FeatureTable feature_table_from_csv(std::string_view csv);
/// {"columns":[...], "rows":[{"community_name":..., col: value|null}, ...]}
std::string feature_table_to_json(const FeatureTable& t);

/// Column names the aggregation reads from each source. Every source dataset
/// is expected to carry the geocoded community column.
struct FeatureConfig {
  std::string community_column = "community";

  std::string wattage_column = "wattage";

  std::string crime_category_column = "category";
  std::string crime_count_column = "count";  // empty: one per row

  std::string disorder_count_column = "count";  // empty: one per row

  std::string pet_species_column = "species";
  std::string pet_count_column;  // empty: one per row

  std::string census_population_column = "population";
  std::string census_male_column = "male";
  std::string census_female_column = "female";
  std::string census_dwelling_column = "dwellings";
  std::string census_apartment_column = "apartments";
  std::vector<std::string> census_passthrough;
};

/// Geocoded sources; absent sources contribute zeros.
struct FeatureSources {
  const Dataset* streetlights = nullptr;
  const Dataset* trees = nullptr;
  const Dataset* traffic_incidents = nullptr;
  const Dataset* crime = nullptr;
  const Dataset* disorder = nullptr;
  const Dataset* pets = nullptr;
  const Dataset* census = nullptr;
};

/// Builds the community table in BoundarySet order. Rows whose community is
/// null are skipped; rows naming an unknown community are skipped and listed
/// in `warnings`.
FeatureTable aggregate_by_community(const FeatureSources& sources, const BoundarySet& b,
                                    const FeatureConfig& config = {},
                                    std::vector<std::string>* warnings = nullptr);

struct SeriesPoint {
  int year = 0;
  int month = 0;  // 0 for yearly buckets
  std::optional<std::string> category;
  double value = 0.0;

  bool operator==(const SeriesPoint&) const = default;
};

struct TimeSeries {
  std::vector<SeriesPoint> points;  // ordered by (category, year, month)
  std::size_t skipped_rows = 0;     // rows whose date did not parse
};

/// Counts per (year, month[, category]). Missing months inside the observed
/// span are zero-filled for every category. When `count_column` is set, each
/// row contributes its count (null counts as 0) instead of 1.
TimeSeries monthly_series(const Dataset& d, std::string_view date_column,
                          std::optional<std::string_view> category_column = std::nullopt,
                          std::optional<std::string_view> count_column = std::nullopt);

/// Per calendar month, the mean over every year of the observed span that
/// contains that month; months outside the span are null. Categories are
/// summed first.
std::array<std::optional<double>, 12> monthly_averages(const TimeSeries& ts);

/// As monthly_series but bucketed by year (month = 0).
TimeSeries yearly_by_category(const Dataset& d, std::string_view date_column,
                              std::string_view category_column,
                              std::optional<std::string_view> count_column = std::nullopt);

struct RankedRow {
  std::string community;
  double value = 0.0;

  bool operator==(const RankedRow&) const = default;
};

/// Highest `k` rows by `metric`, ties by community name ascending. Null
/// values are not ranked. Throws ErrorCode::invalid_argument when k < 1.
std::vector<RankedRow> top_k(const FeatureTable& table, std::string_view metric, std::size_t k);

}  // namespace citysafe
