#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "citysafe/table.hpp"

namespace citysafe {

/// WGS84 position in degrees. Construction enforces finite, in-range values.
class GeoPoint {
 public:
  GeoPoint() = default;
  GeoPoint(double latitude, double longitude);

  double latitude() const { return lat_; }
  double longitude() const { return lon_; }

  bool operator==(const GeoPoint&) const = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

/// Closed ring: at least four vertices, first == last.
using Ring = std::vector<GeoPoint>;

struct Community {
  std::string name;
  std::string sector;
  std::vector<Ring> rings;  // outer rings only; one per polygon part
  GeoPoint centroid;
  double min_lat = 0, max_lat = 0, min_lon = 0, max_lon = 0;
};

/// Community polygons, immutable after loading.
class BoundarySet {
 public:
  BoundarySet() = default;
  /// Validates rings and names, computes centroids and bounding boxes, and
  /// records overlap warnings. Throws ErrorCode::load.
  explicit BoundarySet(std::vector<Community> entries);

  const std::vector<Community>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Case-insensitive lookup.
  const Community* find(std::string_view name) const;

  /// Non-fatal issues found while loading (ignored holes, overlaps).
  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 private:
  std::vector<Community> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> warnings_;
};

/// Reads a GeoJSON FeatureCollection of Polygon / MultiPolygon features.
/// `name_property` names the community; `sector_property` is optional.
/// Interior rings are dropped with a warning. Throws ErrorCode::load citing
/// the feature index.
BoundarySet load_boundaries(std::string_view geojson, std::string_view name_property = "name",
                            std::string_view sector_property = "sector");

/// Area-weighted centroid over all rings (shoelace formula in raw lat/lon).
/// Falls back to the mean of distinct vertices when the total area is zero.
GeoPoint community_centroid(const std::vector<Ring>& rings);

/// Signed shoelace area, longitude as x and latitude as y.
double ring_area(const Ring& ring);

/// Even-odd containment; points on an edge or vertex count as inside.
bool ring_contains(const Ring& ring, double lat, double lon);

/// Name of the first community (stored order) containing the point.
std::optional<std::string> point_in_community(const GeoPoint& p, const BoundarySet& b);

struct GeocodeColumns {
  std::string latitude = "latitude";
  std::string longitude = "longitude";
  std::string community = "community";
  /// Optional latlon-kind column used when the separate columns are absent.
  std::string point;
  /// Provenance column added to the output.
  std::string source = "geocode_source";
};

struct GeocodeReport {
  std::size_t passthrough = 0;
  std::size_t by_centroid = 0;
  std::size_t by_polygon = 0;
  std::size_t unresolved = 0;  // community left null (or unknown) and flagged
};

/// Gives every row coordinates and a community name:
///   both present   -> unchanged
///   name only      -> the community centroid
///   coordinates    -> point_in_community
/// Adds any missing latitude/longitude/community columns plus the provenance
/// column ("passthrough", "centroid", "polygon", "unresolved"). Existing
/// provenance values are kept so the operation is idempotent.
/// Throws ErrorCode::geocoding when the dataset has neither coordinate nor
/// community columns.
Dataset geocode_dataset(const Dataset& d, const BoundarySet& b, const GeocodeColumns& cols = {},
                        GeocodeReport* report = nullptr);

}  // namespace citysafe
