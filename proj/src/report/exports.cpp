#include <cmath>

#include <openssl/evp.h>

#include "citysafe/error.hpp"
#include "citysafe/model.hpp"
#include "citysafe/report.hpp"
#include "json.hpp"
#include "text.hpp"

namespace citysafe::report {

using nlohmann::ordered_json;

namespace {

ordered_json ring_coordinates(const Ring& ring) {
  auto out = ordered_json::array();
  for (const auto& p : ring) out.push_back({p.longitude(), p.latitude()});
  return out;
}

ordered_json community_geometry(const Community& c) {
  ordered_json g;
  if (c.rings.size() == 1) {
    g["type"] = "Polygon";
    g["coordinates"] = ordered_json::array({ring_coordinates(c.rings.front())});
  } else {
    g["type"] = "MultiPolygon";
    auto polys = ordered_json::array();
    for (const auto& r : c.rings) polys.push_back(ordered_json::array({ring_coordinates(r)}));
    g["coordinates"] = std::move(polys);
  }
  return g;
}

std::string csv_cell(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::string export_choropleth(const FeatureTable& features, std::string_view metric, const BoundarySet& boundaries,
                              int bins) {
  if (bins < 2) throw Error(ErrorCode::invalid_argument, "choropleth needs bins >= 2");
  const FeatureColumn& col = features.column(metric);

  std::vector<std::optional<double>> values;
  std::vector<double> present;
  for (const auto& c : boundaries.entries()) {
    const auto row = features.row_of(c.name);
    values.push_back(row ? col.values[*row] : std::nullopt);
    if (values.back()) present.push_back(*values.back());
  }
  const std::vector<int> binned = model::quantile_bins(present, bins);

  ordered_json doc;
  doc["type"] = "FeatureCollection";
  auto list = ordered_json::array();
  std::size_t next = 0;
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    const Community& c = boundaries.entries()[i];
    ordered_json props;
    props["community_name"] = c.name;
    props["sector"] = c.sector;
    props["metric_name"] = metric;
    if (values[i]) {
      props["value"] = *values[i];
      props["quantile_bin"] = binned[next++];
    } else {
      props["value"] = nullptr;
      props["quantile_bin"] = nullptr;
    }
    ordered_json f;
    f["type"] = "Feature";
    f["properties"] = std::move(props);
    f["geometry"] = community_geometry(c);
    list.push_back(std::move(f));
  }
  doc["features"] = std::move(list);
  return doc.dump() + "\n";
}

std::string export_cluster_map(const cluster::PointSet& ps, std::span<const int> labels) {
  if (labels.size() != ps.size()) {
    throw Error(ErrorCode::invalid_argument, "cluster map: " + std::to_string(labels.size()) + " labels for " +
                                                 std::to_string(ps.size()) + " points");
  }
  ordered_json doc;
  doc["type"] = "FeatureCollection";
  auto list = ordered_json::array();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ordered_json f;
    f["type"] = "Feature";
    ordered_json props;
    props["id"] = ps.ids()[i];
    props["cluster"] = labels[i] == cluster::kNoise ? ordered_json("noise") : ordered_json(labels[i]);
    f["properties"] = std::move(props);
    ordered_json g;
    g["type"] = "Point";
    g["coordinates"] = {ps[i].lon, ps[i].lat};
    f["geometry"] = std::move(g);
    list.push_back(std::move(f));
  }
  doc["features"] = std::move(list);
  return doc.dump() + "\n";
}

std::string labels_to_csv(const cluster::PointSet& ps, std::span<const int> labels) {
  if (labels.size() != ps.size()) {
    throw Error(ErrorCode::invalid_argument, "labels: " + std::to_string(labels.size()) + " labels for " +
                                                 std::to_string(ps.size()) + " points");
  }
  std::string out = "id,latitude,longitude,cluster\n";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    out += csv_cell(ps.ids()[i]) + "," + format_double(ps[i].lat) + "," + format_double(ps[i].lon) + "," +
           (labels[i] == cluster::kNoise ? std::string("noise") : std::to_string(labels[i])) + "\n";
  }
  return out;
}

std::string grid_table_to_csv(const cluster::GridResult& result) {
  std::string out = "index,algorithm,params,silhouette,n_clusters,noise,best,note\n";
  for (std::size_t i = 0; i < result.table.size(); ++i) {
    const auto& r = result.table[i];
    out += std::to_string(i) + "," + std::string(cluster::algorithm_name(r.params)) + "," +
           csv_cell(cluster::params_to_json(r.params)) + "," + opt(r.silhouette) + "," +
           std::to_string(r.n_clusters) + "," + std::to_string(r.noise) + "," +
           (i == result.best_index ? "1" : "0") + "," + csv_cell(r.note) + "\n";
  }
  return out;
}

std::string series_to_csv(const TimeSeries& ts) {
  const bool categorized = !ts.points.empty() && ts.points.front().category.has_value();
  const bool monthly = ts.points.empty() || ts.points.front().month != 0;
  std::string out = monthly ? "year,month" : "year";
  if (categorized) out += ",category";
  out += ",value\n";
  for (const auto& p : ts.points) {
    out += std::to_string(p.year);
    if (monthly) out += "," + std::to_string(p.month);
    if (categorized) out += "," + csv_cell(p.category.value_or(""));
    out += "," + format_double(p.value) + "\n";
  }
  return out;
}

std::string monthly_averages_to_csv(const std::array<std::optional<double>, 12>& avg) {
  std::string out = "month,average\n";
  for (std::size_t m = 0; m < avg.size(); ++m) out += std::to_string(m + 1) + "," + opt(avg[m]) + "\n";
  return out;
}

std::string ranked_to_csv(const std::vector<RankedRow>& rows, std::string_view metric) {
  std::string out = "rank,community_name," + csv_cell(metric) + "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += std::to_string(i + 1) + "," + csv_cell(rows[i].community) + "," + format_double(rows[i].value) + "\n";
  }
  return out;
}

cluster::PointSet points_from_dataset(const Dataset& d, std::string_view lat_column, std::string_view lon_column,
                                      std::string_view id_column) {
  const std::size_t lat = d.column_index(lat_column);
  const std::size_t lon = d.column_index(lon_column);
  const std::optional<std::size_t> id =
      id_column.empty() ? std::nullopt : std::optional<std::size_t>(d.column_index(id_column));
  std::vector<cluster::Point> points;
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < d.row_count(); ++r) {
    const auto& row = d.rows()[r];
    const auto a = as_number(row[lat]);
    const auto b = as_number(row[lon]);
    if (!a || !b) continue;
    points.push_back({*a, *b});
    ids.push_back(id ? format_value(row[*id]) : std::to_string(r));
  }
  return cluster::PointSet(std::move(points), std::move(ids));
}

std::optional<double> centroid_share(const Dataset& d, std::string_view source_column) {
  const auto src = d.find_column(source_column);
  if (!src) return std::nullopt;
  std::size_t centroid = 0, located = 0;
  for (const auto& row : d.rows()) {
    const auto* s = std::get_if<std::string>(&row[*src]);
    if (!s) continue;
    ++located;
    if (*s == "centroid") ++centroid;
  }
  if (located == 0) return std::nullopt;
  return static_cast<double>(centroid) / static_cast<double>(located);
}

void require_point_locations(const Dataset& d, std::string_view source_column) {
  const auto share = centroid_share(d, source_column);
  if (share && *share > 0.5) {
    throw Error(ErrorCode::refused, "'" + d.name() + "' is mostly centroid-geocoded (" +
                                        format_double(std::round(*share * 1000.0) / 10.0) +
                                        "% of rows); clustering would only find the community centroids. "
                                        "Override with force");
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::internal, "sha256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

}  // namespace citysafe::report
