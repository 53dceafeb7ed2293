#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <new>
#include <sstream>

#include "citysafe/citysafe.h"
#include "citysafe/error.hpp"
#include "citysafe/ingest.hpp"
#include "citysafe/model.hpp"
#include "citysafe/report.hpp"
#include "report/config_json.hpp"

using namespace citysafe;
using config::Json;

struct cs_dataset {
  Dataset value;
};

struct cs_boundaries {
  BoundarySet value;
};

struct cs_features {
  FeatureTable value;
};

struct cs_cluster_result {
  cluster::PointSet points;
  cluster::GridResult grid;
};

namespace {

thread_local std::string last_error;

cs_status fail(cs_status s, std::string msg) {
  last_error = std::move(msg);
  return s;
}

/// Runs fn, translating exceptions into status codes.
template <typename Fn>
cs_status guard(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return CS_OK;
  } catch (const Error& e) {
    return fail(static_cast<cs_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CS_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

char* dup(std::string_view s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

std::string read_file(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, std::string("cannot read '") + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const char* path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, std::string("cannot write '") + path + "'");
  out << content;
  if (!out) throw Error(ErrorCode::io, std::string("failed writing '") + path + "'");
}

const char* or_default(const char* s, const char* fallback) { return s ? s : fallback; }

cluster::Metric metric_of(int haversine) { return haversine ? cluster::Metric::haversine : cluster::Metric::euclidean; }

cluster::PointSet make_points(const double* lat, const double* lon, std::size_t n) {
  require(n == 0 || (lat && lon), "coordinate arrays must not be NULL");
  std::vector<cluster::Point> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {lat[i], lon[i]};
  return cluster::PointSet(std::move(pts));
}

}  // namespace

extern "C" {

const char* cs_version(void) { return report::version(); }

const char* cs_status_name(cs_status status) {
  switch (status) {
    case CS_OK: return "ok";
    case CS_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case CS_ERR_IO: return "io";
    case CS_ERR_SCHEMA: return "schema";
    case CS_ERR_EMPTY_DATASET: return "empty_dataset";
    case CS_ERR_CONFIGURATION: return "configuration";
    case CS_ERR_LOAD: return "load";
    case CS_ERR_GEOCODING: return "geocoding";
    case CS_ERR_PARAMETER: return "parameter";
    case CS_ERR_UNDEFINED_SCORE: return "undefined_score";
    case CS_ERR_NO_VALID_CLUSTERING: return "no_valid_clustering";
    case CS_ERR_SPLIT: return "split";
    case CS_ERR_FIT: return "fit";
    case CS_ERR_EVALUATION: return "evaluation";
    case CS_ERR_UNKNOWN_METRIC: return "unknown_metric";
    case CS_ERR_STAGE: return "stage";
    case CS_ERR_REFUSED: return "refused";
    case CS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* cs_last_error(void) { return last_error.c_str(); }

void cs_string_free(char* s) { std::free(s); }

cs_status cs_dataset_parse(const char* csv, size_t len, const char* schema_json, const char* name, cs_dataset** out) {
  return guard([&] {
    require(out && schema_json && (csv || len == 0), "cs_dataset_parse: NULL argument");
    *out = nullptr;
    const Schema schema = config::parse_schema(schema_json);
    *out = new cs_dataset{parse_table(std::string_view(csv ? csv : "", len), schema, or_default(name, ""))};
  });
}

cs_status cs_dataset_read(const char* path, const char* schema_json, cs_dataset** out) {
  return guard([&] {
    require(out && path && schema_json, "cs_dataset_read: NULL argument");
    *out = nullptr;
    const Schema schema = config::parse_schema(schema_json);
    *out = new cs_dataset{parse_table(read_file(path), schema, path)};
  });
}

void cs_dataset_free(cs_dataset* d) { delete d; }

size_t cs_dataset_row_count(const cs_dataset* d) { return d ? d->value.row_count() : 0; }

size_t cs_dataset_column_count(const cs_dataset* d) { return d ? d->value.column_count() : 0; }

cs_status cs_dataset_schema(const cs_dataset* d, char** schema_json) {
  return guard([&] {
    require(d && schema_json, "cs_dataset_schema: NULL argument");
    Json j = Json::array();
    for (const auto& c : d->value.columns()) j.push_back({{"name", c.name}, {"kind", to_string(c.kind)}});
    *schema_json = dup(j.dump(2) + "\n");
  });
}

cs_status cs_dataset_drop_duplicates(cs_dataset* d) {
  return guard([&] {
    require(d, "cs_dataset_drop_duplicates: NULL dataset");
    d->value = drop_duplicates(d->value);
  });
}

cs_status cs_dataset_apply_policy(cs_dataset* d, const char* policy_json) {
  return guard([&] {
    require(d && policy_json, "cs_dataset_apply_policy: NULL argument");
    d->value = apply_policy(d->value, config::parse_policy(policy_json));
  });
}

cs_status cs_dataset_categorize(cs_dataset* d, const char* description_column, const char* category_column,
                                const char* rules_json) {
  return guard([&] {
    require(d && description_column && category_column, "cs_dataset_categorize: NULL argument");
    const CategoryRules rules = rules_json ? config::parse_category_rules(rules_json) : default_category_rules();
    d->value = categorize(d->value, description_column, category_column, rules);
  });
}

cs_status cs_dataset_to_csv(const cs_dataset* d, char** csv) {
  return guard([&] {
    require(d && csv, "cs_dataset_to_csv: NULL argument");
    *csv = dup(serialize_table(d->value));
  });
}

cs_status cs_dataset_write(const cs_dataset* d, const char* path) {
  return guard([&] {
    require(d && path, "cs_dataset_write: NULL argument");
    write_file(path, serialize_table(d->value));
  });
}

cs_status cs_boundaries_parse(const char* geojson, const char* name_property, const char* sector_property,
                              cs_boundaries** out) {
  return guard([&] {
    require(geojson && out, "cs_boundaries_parse: NULL argument");
    *out = nullptr;
    *out = new cs_boundaries{
        load_boundaries(geojson, or_default(name_property, "name"), or_default(sector_property, "sector"))};
  });
}

cs_status cs_boundaries_read(const char* path, const char* name_property, const char* sector_property,
                             cs_boundaries** out) {
  return guard([&] {
    require(path && out, "cs_boundaries_read: NULL argument");
    *out = nullptr;
    *out = new cs_boundaries{
        load_boundaries(read_file(path), or_default(name_property, "name"), or_default(sector_property, "sector"))};
  });
}

void cs_boundaries_free(cs_boundaries* b) { delete b; }

size_t cs_boundaries_count(const cs_boundaries* b) { return b ? b->value.size() : 0; }

cs_status cs_boundaries_locate(const cs_boundaries* b, double lat, double lon, char** community) {
  return guard([&] {
    require(b && community, "cs_boundaries_locate: NULL argument");
    *community = nullptr;
    const auto hit = point_in_community(GeoPoint(lat, lon), b->value);
    if (hit) *community = dup(*hit);
  });
}

cs_status cs_boundaries_centroid(const cs_boundaries* b, const char* community, double* lat, double* lon) {
  return guard([&] {
    require(b && community && lat && lon, "cs_boundaries_centroid: NULL argument");
    const Community* c = b->value.find(community);
    if (!c) throw Error(ErrorCode::geocoding, std::string("unknown community '") + community + "'");
    *lat = c->centroid.latitude();
    *lon = c->centroid.longitude();
  });
}

cs_status cs_boundaries_warnings(const cs_boundaries* b, char** warnings_json) {
  return guard([&] {
    require(b && warnings_json, "cs_boundaries_warnings: NULL argument");
    *warnings_json = dup(Json(b->value.warnings()).dump());
  });
}

cs_status cs_geocode(cs_dataset* d, const cs_boundaries* b, const char* columns_json, char** report_json) {
  return guard([&] {
    require(d && b, "cs_geocode: NULL argument");
    GeocodeColumns cols;
    if (columns_json) {
      const Json j = config::parse_json(columns_json, "geocode columns");
      if (!j.is_object()) throw Error(ErrorCode::configuration, "geocode columns must be a JSON object");
      cols.latitude = j.value("latitude", cols.latitude);
      cols.longitude = j.value("longitude", cols.longitude);
      cols.community = j.value("community", cols.community);
      cols.point = j.value("point", cols.point);
      cols.source = j.value("source", cols.source);
    }
    GeocodeReport r;
    Dataset out = geocode_dataset(d->value, b->value, cols, &r);
    if (report_json) {
      const Json j = {{"passthrough", r.passthrough},
                      {"centroid", r.by_centroid},
                      {"polygon", r.by_polygon},
                      {"unresolved", r.unresolved}};
      *report_json = dup(j.dump());
    }
    d->value = std::move(out);
  });
}

cs_status cs_features_build(const cs_dataset* const* datasets, const char* const* roles, size_t count,
                            const cs_boundaries* b, const char* config_json, cs_features** out,
                            char** warnings_json) {
  return guard([&] {
    require(b && out && (count == 0 || (datasets && roles)), "cs_features_build: NULL argument");
    *out = nullptr;
    FeatureSources src;
    const std::map<std::string, const Dataset**> slots = {
        {"streetlights", &src.streetlights}, {"trees", &src.trees}, {"traffic_incidents", &src.traffic_incidents},
        {"crime", &src.crime},               {"disorder", &src.disorder}, {"pets", &src.pets},
        {"census", &src.census}};
    for (std::size_t i = 0; i < count; ++i) {
      require(datasets[i] && roles[i], "cs_features_build: NULL dataset or role");
      const auto it = slots.find(roles[i]);
      if (it == slots.end()) throw Error(ErrorCode::configuration, std::string("unknown dataset role '") + roles[i] + "'");
      *it->second = &datasets[i]->value;
    }
    const FeatureConfig cfg = config_json ? config::parse_feature_config(config_json) : FeatureConfig{};
    std::vector<std::string> warnings;
    FeatureTable t = aggregate_by_community(src, b->value, cfg, &warnings);
    if (warnings_json) *warnings_json = dup(Json(warnings).dump());
    *out = new cs_features{std::move(t)};
  });
}

cs_status cs_features_parse_csv(const char* csv, cs_features** out) {
  return guard([&] {
    require(csv && out, "cs_features_parse_csv: NULL argument");
    *out = nullptr;
    *out = new cs_features{feature_table_from_csv(csv)};
  });
}

void cs_features_free(cs_features* f) { delete f; }

size_t cs_features_row_count(const cs_features* f) { return f ? f->value.row_count() : 0; }

cs_status cs_features_to_csv(const cs_features* f, char** csv) {
  return guard([&] {
    require(f && csv, "cs_features_to_csv: NULL argument");
    *csv = dup(feature_table_to_csv(f->value));
  });
}

cs_status cs_features_to_json(const cs_features* f, char** json) {
  return guard([&] {
    require(f && json, "cs_features_to_json: NULL argument");
    *json = dup(feature_table_to_json(f->value));
  });
}

cs_status cs_features_value(const cs_features* f, const char* community, const char* column, double* value,
                            int* is_null) {
  return guard([&] {
    require(f && community && column && value && is_null, "cs_features_value: NULL argument");
    const auto row = f->value.row_of(community);
    if (!row) throw Error(ErrorCode::invalid_argument, std::string("unknown community '") + community + "'");
    const auto& v = f->value.column(column).values[*row];
    *is_null = v ? 0 : 1;
    if (v) *value = *v;
  });
}

cs_status cs_features_top_k(const cs_features* f, const char* metric, size_t k, char** csv) {
  return guard([&] {
    require(f && metric && csv, "cs_features_top_k: NULL argument");
    *csv = dup(report::ranked_to_csv(top_k(f->value, metric, k), metric));
  });
}

cs_status cs_trends(const cs_dataset* d, const char* date_column, const char* category_column,
                    const char* count_column, char** monthly_csv, char** yearly_csv) {
  return guard([&] {
    require(d && date_column && monthly_csv, "cs_trends: NULL argument");
    std::optional<std::string_view> cat, count;
    if (category_column) cat = category_column;
    if (count_column) count = count_column;
    std::string monthly = report::series_to_csv(monthly_series(d->value, date_column, cat, count));
    std::string yearly;
    if (yearly_csv && cat) yearly = report::series_to_csv(yearly_by_category(d->value, date_column, *cat, count));
    *monthly_csv = dup(monthly);
    if (yearly_csv) *yearly_csv = cat ? dup(yearly) : nullptr;
  });
}

cs_status cs_cluster_search(const double* lat, const double* lon, size_t n, const char* algorithm,
                            const char* grid_json, uint64_t seed, int haversine, cs_cluster_result** out) {
  return guard([&] {
    require(algorithm && out, "cs_cluster_search: NULL argument");
    *out = nullptr;
    cluster::PointSet ps = make_points(lat, lon, n);
    const auto grid = cluster::expand_grid(algorithm, or_default(grid_json, "{}"));
    cluster::GridResult g = cluster::grid_search(ps, grid, seed, metric_of(haversine));
    *out = new cs_cluster_result{std::move(ps), std::move(g)};
  });
}

cs_status cs_cluster_search_dataset(const cs_dataset* d, const char* lat_column, const char* lon_column,
                                    const char* id_column, size_t sample_size, const char* algorithm,
                                    const char* grid_json, uint64_t seed, int haversine, int force,
                                    cs_cluster_result** out) {
  return guard([&] {
    require(d && lat_column && lon_column && algorithm && out, "cs_cluster_search_dataset: NULL argument");
    *out = nullptr;
    if (!force) report::require_point_locations(d->value);
    const auto grid = cluster::expand_grid(algorithm, or_default(grid_json, "{}"));
    cluster::PointSet ps = report::points_from_dataset(d->value, lat_column, lon_column, or_default(id_column, ""));
    if (sample_size > 0 && ps.size() > sample_size) ps = ps.sample(sample_size, seed);
    cluster::GridResult g = cluster::grid_search(ps, grid, seed, metric_of(haversine));
    *out = new cs_cluster_result{std::move(ps), std::move(g)};
  });
}

void cs_cluster_result_free(cs_cluster_result* r) { delete r; }

size_t cs_cluster_result_size(const cs_cluster_result* r) { return r ? r->points.size() : 0; }

int cs_cluster_result_n_clusters(const cs_cluster_result* r) { return r ? r->grid.best.n_clusters : 0; }

cs_status cs_cluster_result_labels(const cs_cluster_result* r, int* labels, size_t capacity) {
  return guard([&] {
    require(r && (labels || capacity == 0), "cs_cluster_result_labels: NULL argument");
    const auto& l = r->grid.best.labels;
    std::copy_n(l.begin(), std::min(capacity, l.size()), labels);
  });
}

cs_status cs_cluster_result_silhouette(const cs_cluster_result* r, double* silhouette) {
  return guard([&] {
    require(r && silhouette, "cs_cluster_result_silhouette: NULL argument");
    *silhouette = r->grid.best.silhouette.value_or(0.0);
  });
}

cs_status cs_cluster_result_params(const cs_cluster_result* r, char** params_json) {
  return guard([&] {
    require(r && params_json, "cs_cluster_result_params: NULL argument");
    *params_json = dup(cluster::params_to_json(r->grid.best.params));
  });
}

cs_status cs_cluster_result_labels_csv(const cs_cluster_result* r, char** csv) {
  return guard([&] {
    require(r && csv, "cs_cluster_result_labels_csv: NULL argument");
    *csv = dup(report::labels_to_csv(r->points, r->grid.best.labels));
  });
}

cs_status cs_cluster_result_grid_csv(const cs_cluster_result* r, char** csv) {
  return guard([&] {
    require(r && csv, "cs_cluster_result_grid_csv: NULL argument");
    *csv = dup(report::grid_table_to_csv(r->grid));
  });
}

cs_status cs_cluster_result_geojson(const cs_cluster_result* r, char** geojson) {
  return guard([&] {
    require(r && geojson, "cs_cluster_result_geojson: NULL argument");
    *geojson = dup(report::export_cluster_map(r->points, r->grid.best.labels));
  });
}

cs_status cs_silhouette(const double* lat, const double* lon, const int* labels, size_t n, int haversine,
                        double* out) {
  return guard([&] {
    require(out && (n == 0 || labels), "cs_silhouette: NULL argument");
    const cluster::PointSet ps = make_points(lat, lon, n);
    *out = cluster::silhouette(ps, std::span<const int>(labels, n), metric_of(haversine));
  });
}

cs_status cs_correlation(const cs_features* f, char** csv, char** json) {
  return guard([&] {
    require(f && (csv || json), "cs_correlation: NULL argument");
    const auto m = model::pearson_matrix(f->value, f->value.column_names());
    if (csv) *csv = dup(model::correlation_to_csv(m));
    if (json) *json = dup(model::correlation_to_json(m));
  });
}

cs_status cs_model_run(const cs_features* f, const char* target, const char* predictors_json,
                       const char* options_json, char** report_json) {
  return guard([&] {
    require(f && target && report_json, "cs_model_run: NULL argument");
    std::vector<std::string> predictors;
    if (predictors_json) {
      const Json j = config::parse_json(predictors_json, "predictor list");
      if (!j.is_array()) throw Error(ErrorCode::configuration, "predictor list must be a JSON array");
      for (const auto& v : j) predictors.push_back(v.get<std::string>());
    }
    const model::AnalysisOptions opts =
        options_json ? config::parse_analysis_options(options_json) : model::AnalysisOptions{};
    const auto a = model::analyze_target(f->value, target, predictors, opts);
    Json out;
    out["selection"] = Json::parse(model::selection_to_json(a.selection));
    out["ols"] = Json::parse(model::report_to_json(a.ols));
    out["random_forest"] = Json::parse(model::report_to_json(a.forest));
    out["importance"] = Json::parse(model::importance_report_json({a}));
    *report_json = dup(out.dump(2) + "\n");
  });
}

cs_status cs_export_choropleth(const cs_features* f, const char* metric, const cs_boundaries* b, int bins,
                               char** geojson) {
  return guard([&] {
    require(f && metric && b && geojson, "cs_export_choropleth: NULL argument");
    *geojson = dup(report::export_choropleth(f->value, metric, b->value, bins));
  });
}

cs_status cs_pipeline_run(const char* config_path, const char* out_dir, int has_seed, uint64_t seed,
                          char** manifest_json, char** failed_stage) {
  if (failed_stage) *failed_stage = nullptr;
  try {
    require(config_path && out_dir, "cs_pipeline_run: NULL argument");
    const auto m = report::run_pipeline(config_path, out_dir, has_seed ? std::optional<std::uint64_t>(seed) : std::nullopt);
    if (manifest_json) *manifest_json = dup(m.to_json());
    last_error.clear();
    return CS_OK;
  } catch (const StageError& e) {
    if (failed_stage) *failed_stage = dup(e.stage());
    return fail(CS_ERR_STAGE, e.what());
  } catch (const Error& e) {
    return fail(static_cast<cs_status>(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(CS_ERR_INTERNAL, e.what());
  }
}

}  // extern "C"
