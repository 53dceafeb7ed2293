#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citysafe/cluster.hpp"
#include "citysafe/features.hpp"
#include "citysafe/geocode.hpp"

namespace citysafe::report {

/// FeatureCollection with one polygon feature per community in boundary
/// order; properties {community_name, sector, metric_name, value,
/// quantile_bin}. Throws ErrorCode::unknown_metric for a missing column and
/// ErrorCode::invalid_argument when bins < 2.
std::string export_choropleth(const FeatureTable& features, std::string_view metric, const BoundarySet& boundaries,
                              int bins = 5);

/// FeatureCollection of points with properties {id, cluster}; noise is the
/// string "noise".
std::string export_cluster_map(const cluster::PointSet& ps, std::span<const int> labels);

/// id,latitude,longitude,cluster with "noise" for unclustered points.
std::string labels_to_csv(const cluster::PointSet& ps, std::span<const int> labels);

/// One row per grid point: algorithm, params (JSON), silhouette, n_clusters,
/// noise, note.
std::string grid_table_to_csv(const cluster::GridResult& result);

/// year,month,category,value (category column only when present).
std::string series_to_csv(const TimeSeries& ts);
std::string monthly_averages_to_csv(const std::array<std::optional<double>, 12>& avg);
std::string ranked_to_csv(const std::vector<RankedRow>& rows, std::string_view metric);

/// Points from real latitude/longitude columns; rows with a null coordinate
/// are skipped. Ids come from `id_column` when given, else the row index.
cluster::PointSet points_from_dataset(const Dataset& d, std::string_view lat_column, std::string_view lon_column,
                                      std::string_view id_column = {});

/// Share of geocoded rows whose coordinates were substituted by a community
/// centroid; null when the source column is absent or all null.
std::optional<double> centroid_share(const Dataset& d, std::string_view source_column = "geocode_source");

/// Throws ErrorCode::refused when most rows sit on community centroids, where
/// spatial clustering only rediscovers the centroid lattice.
void require_point_locations(const Dataset& d, std::string_view source_column = "geocode_source");

std::string sha256_hex(std::string_view bytes);

struct FileDigest {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string version;
  std::string status;  // "ok" | "failed"
  std::string failed_stage;
  std::string error;
  std::uint64_t seed = 0;
  std::string config_path;
  std::string config_sha256;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> artifacts;  // paths relative to the output directory
  std::vector<std::string> stages_completed;
  std::vector<std::string> warnings;
  std::string started_at;
  std::string finished_at;

  std::string to_json() const;
};

/// Runs ingest, geocode, features, model, cluster and export from a JSON
/// config and writes manifest.json into `out_dir`. Configuration problems
/// throw ErrorCode::configuration before any stage starts; a failing stage
/// writes a partial manifest and throws StageError naming it.
RunManifest run_pipeline(const std::string& config_path, const std::string& out_dir,
                         std::optional<std::uint64_t> seed_override = std::nullopt);

const char* version();

}  // namespace citysafe::report
