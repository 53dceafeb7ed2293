#include "citysafe/features.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "citysafe/error.hpp"
#include "citysafe/ingest.hpp"
#include "json.hpp"
#include "text.hpp"

namespace citysafe {

FeatureTable::FeatureTable(std::vector<std::string> communities) : communities_(std::move(communities)) {}

void FeatureTable::add_column(std::string name, std::vector<std::optional<double>> values) {
  if (values.size() != communities_.size()) {
    throw Error(ErrorCode::internal, "column '" + name + "' has " + std::to_string(values.size()) +
                                         " values for " + std::to_string(communities_.size()) + " communities");
  }
  if (find(name) || name == "community_name") {
    throw Error(ErrorCode::internal, "duplicate feature column '" + name + "'");
  }
  columns_.push_back({std::move(name), std::move(values)});
}

const FeatureColumn* FeatureTable::find(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const FeatureColumn& FeatureTable::column(std::string_view name) const {
  if (const auto* c = find(name)) return *c;
  std::string available;
  for (const auto& c : columns_) {
    if (!available.empty()) available += ", ";
    available += c.name;
  }
  throw Error(ErrorCode::unknown_metric,
              "unknown metric '" + std::string(name) + "'; available: " + available);
}

std::vector<std::string> FeatureTable::column_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

std::optional<std::size_t> FeatureTable::row_of(std::string_view community) const {
  const std::string key = name_key(community);
  for (std::size_t i = 0; i < communities_.size(); ++i) {
    if (name_key(communities_[i]) == key) return i;
  }
  return std::nullopt;
}

std::string feature_table_to_csv(const FeatureTable& t) {
  Dataset d("features", {{"community_name", ColumnKind::text}});
  for (const auto& c : t.columns()) d.add_column({c.name, ColumnKind::real});
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    Row row;
    row.emplace_back(t.communities()[r]);
    for (const auto& c : t.columns()) {
      if (c.values[r]) {
        row.emplace_back(*c.values[r]);
      } else {
        row.emplace_back(std::monostate{});
      }
    }
    d.push_row(std::move(row));
  }
  return serialize_table(d);
}

FeatureTable feature_table_from_csv(std::string_view csv) {
  const auto records = split_csv(csv);
  if (records.empty()) throw Error(ErrorCode::empty_dataset, "feature table is empty");
  const auto& header = records.front();
  if (header.empty() || trim(header.front()) != "community_name") {
    throw Error(ErrorCode::schema, "feature table must start with a 'community_name' column");
  }
  std::vector<std::string> communities;
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size()) {
      throw Error(ErrorCode::schema, "feature table record " + std::to_string(r) + " has the wrong field count");
    }
    communities.emplace_back(trim(records[r][0]));
  }
  FeatureTable t(std::move(communities));
  for (std::size_t c = 1; c < header.size(); ++c) {
    std::vector<std::optional<double>> values;
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto cell = trim(records[r][c]);
      if (cell.empty()) {
        values.emplace_back();
        continue;
      }
      const auto v = parse_double(cell);
      if (!v) {
        throw Error(ErrorCode::schema, "column '" + std::string(trim(header[c])) + "' record " +
                                           std::to_string(r) + ": '" + std::string(cell) + "' is not numeric");
      }
      values.emplace_back(*v);
    }
    t.add_column(std::string(trim(header[c])), std::move(values));
  }
  return t;
}

std::string feature_table_to_json(const FeatureTable& t) {
  nlohmann::ordered_json doc;
  doc["columns"] = t.column_names();
  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    nlohmann::ordered_json row;
    row["community_name"] = t.communities()[r];
    for (const auto& c : t.columns()) {
      if (c.values[r]) {
        row[c.name] = *c.values[r];
      } else {
        row[c.name] = nullptr;
      }
    }
    rows.push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

namespace {

/// Resolves community names of one source onto BoundarySet rows.
class CommunityIndex {
 public:
  explicit CommunityIndex(const BoundarySet& b) {
    for (std::size_t i = 0; i < b.size(); ++i) index_.emplace(name_key(b.entries()[i].name), i);
  }

  /// Row index, or nullopt (null community or unknown name; unknown names are
  /// collected for the warning).
  std::optional<std::size_t> resolve(const Value& v, std::set<std::string>& unknown, std::size_t& skipped) const {
    if (is_null(v)) return std::nullopt;
    const std::string name(trim(format_value(v)));
    if (name.empty()) return std::nullopt;
    const auto it = index_.find(name_key(name));
    if (it == index_.end()) {
      unknown.insert(name);
      ++skipped;
      return std::nullopt;
    }
    return it->second;
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

struct SourceScan {
  const Dataset& data;
  std::size_t community_col;
  std::set<std::string> unknown;
  std::size_t skipped = 0;

  SourceScan(const Dataset& d, const std::string& column) : data(d), community_col(d.column_index(column)) {}

  void report(std::vector<std::string>* warnings) const {
    if (!warnings || unknown.empty()) return;
    std::string names;
    for (const auto& n : unknown) {
      if (!names.empty()) names += ", ";
      names += n;
    }
    warnings->push_back("dataset '" + data.name() + "': " + std::to_string(skipped) +
                        " row(s) name communities absent from the boundaries and were excluded: " + names);
  }
};

double count_of(const Row& row, std::optional<std::size_t> count_col) {
  if (!count_col) return 1.0;
  const auto v = as_number(row[*count_col]);
  return v ? *v : 0.0;
}

std::optional<std::size_t> optional_column(const Dataset& d, const std::string& name) {
  if (name.empty()) return std::nullopt;
  return d.column_index(name);
}

using Counts = std::vector<std::optional<double>>;

Counts zeros(std::size_t n) { return Counts(n, 0.0); }

Counts count_rows(const Dataset* d, const CommunityIndex& idx, const FeatureConfig& cfg, std::size_t n,
                  std::vector<std::string>* warnings, std::optional<std::string> count_column = std::nullopt) {
  Counts out = zeros(n);
  if (!d) return out;
  SourceScan scan(*d, cfg.community_column);
  const auto count_col = count_column ? optional_column(*d, *count_column) : std::nullopt;
  for (const auto& row : d->rows()) {
    if (const auto r = idx.resolve(row[scan.community_col], scan.unknown, scan.skipped)) {
      *out[*r] += count_of(row, count_col);
    }
  }
  scan.report(warnings);
  return out;
}

}  // namespace

FeatureTable aggregate_by_community(const FeatureSources& src, const BoundarySet& b, const FeatureConfig& cfg,
                                    std::vector<std::string>* warnings) {
  std::vector<std::string> names;
  for (const auto& c : b.entries()) names.push_back(c.name);
  const std::size_t n = names.size();
  FeatureTable table(names);
  const CommunityIndex idx(b);

  // Streetlights: null wattages count as lights but stay out of the mean.
  {
    Counts count = zeros(n), total = zeros(n), mean(n);
    std::vector<std::size_t> known(n, 0);
    if (src.streetlights) {
      SourceScan scan(*src.streetlights, cfg.community_column);
      const auto watt_col = src.streetlights->column_index(cfg.wattage_column);
      for (const auto& row : src.streetlights->rows()) {
        const auto r = idx.resolve(row[scan.community_col], scan.unknown, scan.skipped);
        if (!r) continue;
        *count[*r] += 1.0;
        if (const auto w = as_number(row[watt_col])) {
          *total[*r] += *w;
          ++known[*r];
        }
      }
      scan.report(warnings);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (known[i] > 0) mean[i] = *total[i] / static_cast<double>(known[i]);
    }
    table.add_column("streetlight_count", std::move(count));
    table.add_column("mean_wattage", std::move(mean));
    table.add_column("total_wattage", std::move(total));
  }

  table.add_column("tree_count", count_rows(src.trees, idx, cfg, n, warnings));
  table.add_column("traffic_incident_count", count_rows(src.traffic_incidents, idx, cfg, n, warnings));

  // Crime: one column per category, total is their sum.
  {
    std::map<std::string, Counts> by_category;
    if (src.crime) {
      SourceScan scan(*src.crime, cfg.community_column);
      const auto cat_col = src.crime->column_index(cfg.crime_category_column);
      const auto count_col = optional_column(*src.crime, cfg.crime_count_column);
      for (const auto& row : src.crime->rows()) {
        const auto r = idx.resolve(row[scan.community_col], scan.unknown, scan.skipped);
        if (!r) continue;
        std::string cat = is_null(row[cat_col]) ? std::string() : std::string(trim(format_value(row[cat_col])));
        if (cat.empty()) cat = "Unknown";
        auto [it, fresh] = by_category.try_emplace(cat, zeros(n));
        *it->second[*r] += count_of(row, count_col);
      }
      scan.report(warnings);
    }
    Counts total = zeros(n);
    for (const auto& [cat, counts] : by_category) {
      for (std::size_t i = 0; i < n; ++i) *total[i] += *counts[i];
    }
    table.add_column("crime_total", std::move(total));
    for (auto& [cat, counts] : by_category) table.add_column("crime:" + cat, std::move(counts));
  }

  table.add_column("disorder_count",
                   count_rows(src.disorder, idx, cfg, n, warnings, cfg.disorder_count_column));

  {
    Counts total = zeros(n), cats = zeros(n), dogs = zeros(n);
    if (src.pets) {
      SourceScan scan(*src.pets, cfg.community_column);
      const auto species_col = src.pets->column_index(cfg.pet_species_column);
      const auto count_col = optional_column(*src.pets, cfg.pet_count_column);
      for (const auto& row : src.pets->rows()) {
        const auto r = idx.resolve(row[scan.community_col], scan.unknown, scan.skipped);
        if (!r) continue;
        const double c = count_of(row, count_col);
        *total[*r] += c;
        const std::string species = is_null(row[species_col]) ? std::string() : to_lower(trim(format_value(row[species_col])));
        if (species == "cat" || species == "cats") *cats[*r] += c;
        if (species == "dog" || species == "dogs") *dogs[*r] += c;
      }
      scan.report(warnings);
    }
    table.add_column("pet_total", std::move(total));
    table.add_column("cat_count", std::move(cats));
    table.add_column("dog_count", std::move(dogs));
  }

  {
    Counts population = zeros(n), dwellings = zeros(n), apartments = zeros(n), ratio(n);
    std::vector<Counts> passthrough(cfg.census_passthrough.size(), zeros(n));
    if (src.census) {
      const Dataset& c = *src.census;
      SourceScan scan(c, cfg.community_column);
      const auto pop_col = c.column_index(cfg.census_population_column);
      const auto male_col = c.column_index(cfg.census_male_column);
      const auto female_col = c.column_index(cfg.census_female_column);
      const auto dwell_col = c.column_index(cfg.census_dwelling_column);
      const auto apt_col = c.column_index(cfg.census_apartment_column);
      std::vector<std::size_t> pass_cols;
      for (const auto& name : cfg.census_passthrough) pass_cols.push_back(c.column_index(name));
      std::vector<double> male(n, 0.0), female(n, 0.0);
      std::vector<bool> seen(n, false);
      auto num = [](const Value& v) { return as_number(v).value_or(0.0); };
      for (const auto& row : c.rows()) {
        const auto r = idx.resolve(row[scan.community_col], scan.unknown, scan.skipped);
        if (!r) continue;
        seen[*r] = true;
        *population[*r] += num(row[pop_col]);
        *dwellings[*r] += num(row[dwell_col]);
        *apartments[*r] += num(row[apt_col]);
        male[*r] += num(row[male_col]);
        female[*r] += num(row[female_col]);
        for (std::size_t p = 0; p < pass_cols.size(); ++p) *passthrough[p][*r] += num(row[pass_cols[p]]);
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (seen[i] && female[i] > 0.0) ratio[i] = male[i] / female[i];
      }
      scan.report(warnings);
    }
    table.add_column("population", std::move(population));
    table.add_column("male_female_ratio", std::move(ratio));
    table.add_column("dwelling_count", std::move(dwellings));
    table.add_column("apartment_count", std::move(apartments));
    for (std::size_t p = 0; p < passthrough.size(); ++p) {
      table.add_column(cfg.census_passthrough[p], std::move(passthrough[p]));
    }
  }
  return table;
}

namespace {

std::optional<Date> date_of(const Value& v) {
  if (const auto* d = std::get_if<Date>(&v)) return *d;
  if (const auto* s = std::get_if<std::string>(&v)) return parse_date(*s);
  return std::nullopt;
}

/// Buckets keyed by (category, period). Period is year*12 + (month-1) for
/// monthly series and the year for yearly ones.
TimeSeries bucket_series(const Dataset& d, std::string_view date_column,
                         std::optional<std::string_view> category_column,
                         std::optional<std::string_view> count_column, bool monthly) {
  const std::size_t date_col = d.column_index(date_column);
  const auto cat_col = category_column ? std::optional(d.column_index(*category_column)) : std::nullopt;
  const auto count_col = count_column ? std::optional(d.column_index(*count_column)) : std::nullopt;

  TimeSeries out;
  std::map<std::optional<std::string>, std::map<long, double>> buckets;
  long lo = 0, hi = 0;
  bool any = false;
  for (const auto& row : d.rows()) {
    const auto date = date_of(row[date_col]);
    if (!date) {
      ++out.skipped_rows;
      continue;
    }
    const long period = monthly ? date->year * 12L + (date->month - 1) : date->year;
    std::optional<std::string> cat;
    if (cat_col) {
      cat = is_null(row[*cat_col]) ? std::string("Unknown") : std::string(trim(format_value(row[*cat_col])));
    }
    buckets[cat][period] += count_of(row, count_col);
    lo = any ? std::min(lo, period) : period;
    hi = any ? std::max(hi, period) : period;
    any = true;
  }
  for (auto& [cat, series] : buckets) {
    for (long p = lo; p <= hi; ++p) {
      const auto it = series.find(p);
      SeriesPoint pt;
      pt.year = monthly ? static_cast<int>(p / 12) : static_cast<int>(p);
      pt.month = monthly ? static_cast<int>(p % 12) + 1 : 0;
      pt.category = cat;
      pt.value = it == series.end() ? 0.0 : it->second;
      out.points.push_back(std::move(pt));
    }
  }
  return out;
}

}  // namespace

TimeSeries monthly_series(const Dataset& d, std::string_view date_column,
                          std::optional<std::string_view> category_column,
                          std::optional<std::string_view> count_column) {
  return bucket_series(d, date_column, category_column, count_column, true);
}

TimeSeries yearly_by_category(const Dataset& d, std::string_view date_column, std::string_view category_column,
                              std::optional<std::string_view> count_column) {
  return bucket_series(d, date_column, category_column, count_column, false);
}

std::array<std::optional<double>, 12> monthly_averages(const TimeSeries& ts) {
  if (ts.points.empty()) throw Error(ErrorCode::invalid_argument, "monthly averages need at least one bucket");
  std::map<long, double> totals;
  for (const auto& p : ts.points) {
    if (p.month < 1 || p.month > 12) {
      throw Error(ErrorCode::invalid_argument, "monthly averages need a monthly series");
    }
    totals[p.year * 12L + (p.month - 1)] += p.value;
  }
  const long lo = totals.begin()->first;
  const long hi = totals.rbegin()->first;
  std::array<std::optional<double>, 12> out{};
  for (int m = 0; m < 12; ++m) {
    double sum = 0.0;
    int years = 0;
    for (long y = lo / 12; y <= hi / 12; ++y) {
      const long period = y * 12 + m;
      if (period < lo || period > hi) continue;
      ++years;
      if (const auto it = totals.find(period); it != totals.end()) sum += it->second;
    }
    if (years > 0) out[m] = sum / years;
  }
  return out;
}

std::vector<RankedRow> top_k(const FeatureTable& table, std::string_view metric, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::invalid_argument, "top_k needs k >= 1");
  const auto& col = table.column(metric);
  std::vector<RankedRow> rows;
  for (std::size_t i = 0; i < table.row_count(); ++i) {
    if (col.values[i]) rows.push_back({table.communities()[i], *col.values[i]});
  }
  std::sort(rows.begin(), rows.end(), [](const RankedRow& a, const RankedRow& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.community < b.community;
  });
  if (rows.size() > k) rows.resize(k);
  return rows;
}

}  // namespace citysafe
