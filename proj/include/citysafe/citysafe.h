#ifndef CITYSAFE_CITYSAFE_H
#define CITYSAFE_CITYSAFE_H

#include <stddef.h>
#include <stdint.h>

#if defined(CITYSAFE_BUILDING)
#define CS_API __attribute__((visibility("default")))
#else
#define CS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns CS_OK or an error status; the message of the last
 * failure on the calling thread is available from cs_last_error(). Strings
 * returned through char** out-parameters are owned by the caller and released
 * with cs_string_free(). Handles are released with their *_free function;
 * passing NULL to any *_free is a no-op. */

typedef enum cs_status {
  CS_OK = 0,
  CS_ERR_INVALID_ARGUMENT = 1,
  CS_ERR_IO = 2,
  CS_ERR_SCHEMA = 3,
  CS_ERR_EMPTY_DATASET = 4,
  CS_ERR_CONFIGURATION = 5,
  CS_ERR_LOAD = 6,
  CS_ERR_GEOCODING = 7,
  CS_ERR_PARAMETER = 8,
  CS_ERR_UNDEFINED_SCORE = 9,
  CS_ERR_NO_VALID_CLUSTERING = 10,
  CS_ERR_SPLIT = 11,
  CS_ERR_FIT = 12,
  CS_ERR_EVALUATION = 13,
  CS_ERR_UNKNOWN_METRIC = 14,
  CS_ERR_STAGE = 15,
  CS_ERR_REFUSED = 16,
  CS_ERR_INTERNAL = 17
} cs_status;

typedef struct cs_dataset cs_dataset;
typedef struct cs_boundaries cs_boundaries;
typedef struct cs_features cs_features;
typedef struct cs_cluster_result cs_cluster_result;

CS_API const char* cs_version(void);
CS_API const char* cs_status_name(cs_status status);
/* Message of the last failure on this thread; "" when none. */
CS_API const char* cs_last_error(void);
CS_API void cs_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* schema_json: [{"name": ..., "kind": ...}] or {"name": "kind", ...}. */
CS_API cs_status cs_dataset_parse(const char* csv, size_t len, const char* schema_json, const char* name,
                                  cs_dataset** out);
CS_API cs_status cs_dataset_read(const char* path, const char* schema_json, cs_dataset** out);
CS_API void cs_dataset_free(cs_dataset* d);
CS_API size_t cs_dataset_row_count(const cs_dataset* d);
CS_API size_t cs_dataset_column_count(const cs_dataset* d);
/* Current column kinds in the schema JSON array form. */
CS_API cs_status cs_dataset_schema(const cs_dataset* d, char** schema_json);
CS_API cs_status cs_dataset_drop_duplicates(cs_dataset* d);
/* {"zero_fill": [...], "drop_null": [...], "dedup": true} */
CS_API cs_status cs_dataset_apply_policy(cs_dataset* d, const char* policy_json);
/* rules_json may be NULL for the built-in incident rules. */
CS_API cs_status cs_dataset_categorize(cs_dataset* d, const char* description_column, const char* category_column,
                                       const char* rules_json);
CS_API cs_status cs_dataset_to_csv(const cs_dataset* d, char** csv);
CS_API cs_status cs_dataset_write(const cs_dataset* d, const char* path);

/* ---- boundaries and geocoding ------------------------------------------ */

/* name_property / sector_property may be NULL ("name" / "sector"). */
CS_API cs_status cs_boundaries_parse(const char* geojson, const char* name_property, const char* sector_property,
                                     cs_boundaries** out);
CS_API cs_status cs_boundaries_read(const char* path, const char* name_property, const char* sector_property,
                                    cs_boundaries** out);
CS_API void cs_boundaries_free(cs_boundaries* b);
CS_API size_t cs_boundaries_count(const cs_boundaries* b);
/* *community is NULL when the point lies in no community. */
CS_API cs_status cs_boundaries_locate(const cs_boundaries* b, double lat, double lon, char** community);
CS_API cs_status cs_boundaries_centroid(const cs_boundaries* b, const char* community, double* lat, double* lon);
/* Warnings raised while loading, as a JSON array of strings. */
CS_API cs_status cs_boundaries_warnings(const cs_boundaries* b, char** warnings_json);

/* Fills coordinates and community in place. columns_json may be NULL or
 * {"latitude", "longitude", "community", "point", "source"}. report_json may
 * be NULL. */
CS_API cs_status cs_geocode(cs_dataset* d, const cs_boundaries* b, const char* columns_json, char** report_json);

/* ---- community features ------------------------------------------------ */

/* roles[i] names datasets[i]: streetlights, trees, traffic_incidents, crime,
 * disorder, pets or census. config_json may be NULL. warnings_json may be
 * NULL. */
CS_API cs_status cs_features_build(const cs_dataset* const* datasets, const char* const* roles, size_t count,
                                   const cs_boundaries* b, const char* config_json, cs_features** out,
                                   char** warnings_json);
CS_API cs_status cs_features_parse_csv(const char* csv, cs_features** out);
CS_API void cs_features_free(cs_features* f);
CS_API size_t cs_features_row_count(const cs_features* f);
CS_API cs_status cs_features_to_csv(const cs_features* f, char** csv);
CS_API cs_status cs_features_to_json(const cs_features* f, char** json);
/* *is_null is set to 1 for a null cell (and *value left untouched). */
CS_API cs_status cs_features_value(const cs_features* f, const char* community, const char* column, double* value,
                                   int* is_null);
CS_API cs_status cs_features_top_k(const cs_features* f, const char* metric, size_t k, char** csv);
/* Monthly counts (and yearly per category when category_column is set) as
 * CSV. category_column and count_column may be NULL. yearly_csv may be NULL. */
CS_API cs_status cs_trends(const cs_dataset* d, const char* date_column, const char* category_column,
                           const char* count_column, char** monthly_csv, char** yearly_csv);

/* ---- clustering -------------------------------------------------------- */

/* Grid search over the Cartesian product in grid_json; the best labelling by
 * silhouette is kept. algorithm: kmeans, clarans, dbscan, optics, agglo,
 * clique. haversine != 0 switches distances to kilometres. */
CS_API cs_status cs_cluster_search(const double* lat, const double* lon, size_t n, const char* algorithm,
                                   const char* grid_json, uint64_t seed, int haversine, cs_cluster_result** out);
/* As cs_cluster_search on the real latitude/longitude columns of a geocoded
 * dataset; rows with null coordinates are skipped, more than sample_size
 * points are subsampled (0 = no limit). Refuses mostly centroid-geocoded
 * data with CS_ERR_REFUSED unless force != 0. id_column may be NULL. */
CS_API cs_status cs_cluster_search_dataset(const cs_dataset* d, const char* lat_column, const char* lon_column,
                                           const char* id_column, size_t sample_size, const char* algorithm,
                                           const char* grid_json, uint64_t seed, int haversine, int force,
                                           cs_cluster_result** out);
CS_API void cs_cluster_result_free(cs_cluster_result* r);
CS_API size_t cs_cluster_result_size(const cs_cluster_result* r);
CS_API int cs_cluster_result_n_clusters(const cs_cluster_result* r);
/* Copies min(capacity, size) labels; noise is -1. */
CS_API cs_status cs_cluster_result_labels(const cs_cluster_result* r, int* labels, size_t capacity);
CS_API cs_status cs_cluster_result_silhouette(const cs_cluster_result* r, double* silhouette);
CS_API cs_status cs_cluster_result_params(const cs_cluster_result* r, char** params_json);
/* id,latitude,longitude,cluster of the best labelling. */
CS_API cs_status cs_cluster_result_labels_csv(const cs_cluster_result* r, char** csv);
CS_API cs_status cs_cluster_result_grid_csv(const cs_cluster_result* r, char** csv);
CS_API cs_status cs_cluster_result_geojson(const cs_cluster_result* r, char** geojson);

CS_API cs_status cs_silhouette(const double* lat, const double* lon, const int* labels, size_t n, int haversine,
                               double* out);

/* ---- modelling --------------------------------------------------------- */

CS_API cs_status cs_correlation(const cs_features* f, char** csv, char** json);
/* predictors_json: JSON array of column names, or NULL for every other
 * column. options_json may be NULL. The result is
 * {"selection": ..., "ols": ..., "random_forest": ..., "importance": ...}. */
CS_API cs_status cs_model_run(const cs_features* f, const char* target, const char* predictors_json,
                              const char* options_json, char** report_json);

/* ---- export and pipeline ----------------------------------------------- */

CS_API cs_status cs_export_choropleth(const cs_features* f, const char* metric, const cs_boundaries* b, int bins,
                                      char** geojson);
/* Runs the whole pipeline. The seed overrides the config when has_seed != 0.
 * manifest_json and failed_stage may be NULL; *failed_stage is set only on
 * CS_ERR_STAGE. */
CS_API cs_status cs_pipeline_run(const char* config_path, const char* out_dir, int has_seed, uint64_t seed,
                                 char** manifest_json, char** failed_stage);

#ifdef __cplusplus
}
#endif

#endif
