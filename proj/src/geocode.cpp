#include "citysafe/geocode.hpp"

#include <algorithm>
#include <cmath>

#include "citysafe/error.hpp"
#include "json.hpp"
#include "text.hpp"

namespace citysafe {

using nlohmann::json;

GeoPoint::GeoPoint(double latitude, double longitude) : lat_(latitude), lon_(longitude) {
  if (!std::isfinite(latitude) || !std::isfinite(longitude) || latitude < -90.0 || latitude > 90.0 ||
      longitude < -180.0 || longitude > 180.0) {
    throw Error(ErrorCode::invalid_argument, "coordinate (" + format_double(latitude) + ", " +
                                                 format_double(longitude) + ") is out of range");
  }
}

double ring_area(const Ring& ring) {
  if (ring.size() < 3) return 0.0;
  // Shift to the first vertex to keep precision at city-scale offsets.
  const double x0 = ring.front().longitude();
  const double y0 = ring.front().latitude();
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const double xi = ring[i].longitude() - x0, yi = ring[i].latitude() - y0;
    const double xj = ring[i + 1].longitude() - x0, yj = ring[i + 1].latitude() - y0;
    twice += xi * yj - xj * yi;
  }
  return 0.5 * twice;
}

GeoPoint community_centroid(const std::vector<Ring>& rings) {
  double area_sum = 0.0, cx_sum = 0.0, cy_sum = 0.0;
  for (const auto& ring : rings) {
    if (ring.size() < 4) continue;
    const double x0 = ring.front().longitude();
    const double y0 = ring.front().latitude();
    double twice = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      const double xi = ring[i].longitude() - x0, yi = ring[i].latitude() - y0;
      const double xj = ring[i + 1].longitude() - x0, yj = ring[i + 1].latitude() - y0;
      const double cross = xi * yj - xj * yi;
      twice += cross;
      cx += (xi + xj) * cross;
      cy += (yi + yj) * cross;
    }
    if (twice == 0.0) continue;
    const double area = 0.5 * twice;
    // Ring centroid is orientation independent; weight by |area|.
    const double rx = x0 + cx / (3.0 * twice);
    const double ry = y0 + cy / (3.0 * twice);
    const double w = std::fabs(area);
    area_sum += w;
    cx_sum += w * rx;
    cy_sum += w * ry;
  }
  if (area_sum > 0.0) return GeoPoint(cy_sum / area_sum, cx_sum / area_sum);

  double lat = 0.0, lon = 0.0;
  std::size_t n = 0;
  for (const auto& ring : rings) {
    const std::size_t count = ring.size() > 1 && ring.front() == ring.back() ? ring.size() - 1 : ring.size();
    for (std::size_t i = 0; i < count; ++i) {
      lat += ring[i].latitude();
      lon += ring[i].longitude();
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::invalid_argument, "centroid of an empty polygon");
  return GeoPoint(lat / static_cast<double>(n), lon / static_cast<double>(n));
}

namespace {

enum class Location { outside, boundary, inside };

Location locate(const Ring& ring, double lat, double lon) {
  bool inside = false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const double ax = ring[i].longitude(), ay = ring[i].latitude();
    const double bx = ring[i + 1].longitude(), by = ring[i + 1].latitude();
    const double cross = (bx - ax) * (lat - ay) - (by - ay) * (lon - ax);
    if (cross == 0.0 && lon >= std::min(ax, bx) && lon <= std::max(ax, bx) && lat >= std::min(ay, by) &&
        lat <= std::max(ay, by)) {
      return Location::boundary;
    }
    if ((ay > lat) != (by > lat)) {
      const double x_cross = ax + (lat - ay) * (bx - ax) / (by - ay);
      if (lon < x_cross) inside = !inside;
    }
  }
  return inside ? Location::inside : Location::outside;
}

Location locate(const Community& c, double lat, double lon) {
  if (lat < c.min_lat || lat > c.max_lat || lon < c.min_lon || lon > c.max_lon) return Location::outside;
  Location best = Location::outside;
  for (const auto& ring : c.rings) {
    const Location l = locate(ring, lat, lon);
    if (l == Location::inside) return l;
    if (l == Location::boundary) best = l;
  }
  return best;
}

bool strictly_inside_sample(const Community& a, const Community& b) {
  if (locate(b, a.centroid.latitude(), a.centroid.longitude()) == Location::inside) return true;
  for (const auto& ring : a.rings) {
    for (const auto& v : ring) {
      if (locate(b, v.latitude(), v.longitude()) == Location::inside) return true;
    }
  }
  return false;
}

}  // namespace

bool ring_contains(const Ring& ring, double lat, double lon) {
  return locate(ring, lat, lon) != Location::outside;
}

BoundarySet::BoundarySet(std::vector<Community> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& c = entries_[i];
    const std::string where = "feature " + std::to_string(i) + " ('" + c.name + "')";
    if (trim(c.name).empty()) throw Error(ErrorCode::load, where + ": empty community name");
    if (c.rings.empty()) throw Error(ErrorCode::load, where + ": no polygon rings");
    c.min_lat = c.min_lon = INFINITY;
    c.max_lat = c.max_lon = -INFINITY;
    for (const auto& ring : c.rings) {
      if (ring.size() < 4) {
        throw Error(ErrorCode::load, where + ": ring has " + std::to_string(ring.size()) +
                                         " vertices, at least 4 required");
      }
      if (!(ring.front() == ring.back())) throw Error(ErrorCode::load, where + ": ring is not closed");
      for (const auto& v : ring) {
        c.min_lat = std::min(c.min_lat, v.latitude());
        c.max_lat = std::max(c.max_lat, v.latitude());
        c.min_lon = std::min(c.min_lon, v.longitude());
        c.max_lon = std::max(c.max_lon, v.longitude());
      }
    }
    c.centroid = community_centroid(c.rings);
    if (!index_.emplace(name_key(c.name), i).second) {
      throw Error(ErrorCode::load, where + ": duplicate community name");
    }
  }

  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (std::size_t j = i + 1; j < entries_.size(); ++j) {
      const auto& a = entries_[i];
      const auto& b = entries_[j];
      if (a.max_lat < b.min_lat || b.max_lat < a.min_lat || a.max_lon < b.min_lon || b.max_lon < a.min_lon) {
        continue;
      }
      if (strictly_inside_sample(a, b) || strictly_inside_sample(b, a)) {
        warnings_.push_back("communities '" + a.name + "' and '" + b.name +
                            "' overlap; '" + a.name + "' takes precedence");
      }
    }
  }
}

const Community* BoundarySet::find(std::string_view name) const {
  const auto it = index_.find(name_key(name));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

namespace {

Ring parse_ring(const json& coords, std::size_t feature) {
  if (!coords.is_array()) {
    throw Error(ErrorCode::load, "feature " + std::to_string(feature) + ": ring is not an array");
  }
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw Error(ErrorCode::load, "feature " + std::to_string(feature) + ": malformed position");
    }
    try {
      // GeoJSON positions are [longitude, latitude].
      ring.emplace_back(pos[1].get<double>(), pos[0].get<double>());
    } catch (const Error& e) {
      throw Error(ErrorCode::load, "feature " + std::to_string(feature) + ": " + e.what());
    }
  }
  return ring;
}

}  // namespace

BoundarySet load_boundaries(std::string_view geojson, std::string_view name_property,
                            std::string_view sector_property) {
  json doc;
  try {
    doc = json::parse(geojson);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::load, std::string("boundary file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw Error(ErrorCode::load, "boundary file is not a GeoJSON FeatureCollection");
  }

  std::vector<Community> entries;
  std::vector<std::string> warnings;
  const auto& features = doc["features"];
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    const std::string where = "feature " + std::to_string(i);
    const json* props = f.contains("properties") && f["properties"].is_object() ? &f["properties"] : nullptr;
    const std::string key(name_property);
    if (!props || !props->contains(key) || !(*props)[key].is_string()) {
      throw Error(ErrorCode::load, where + ": missing '" + key + "' property");
    }
    Community c;
    c.name = std::string(trim((*props)[key].get<std::string>()));
    const std::string sector_key(sector_property);
    if (props->contains(sector_key) && (*props)[sector_key].is_string()) {
      c.sector = (*props)[sector_key].get<std::string>();
    }

    if (!f.contains("geometry") || !f["geometry"].is_object()) {
      throw Error(ErrorCode::load, where + ": missing geometry");
    }
    const auto& g = f["geometry"];
    const std::string type = g.value("type", "");
    if (!g.contains("coordinates") || !g["coordinates"].is_array()) {
      throw Error(ErrorCode::load, where + ": geometry has no coordinates");
    }
    std::vector<json> polygons;
    if (type == "Polygon") {
      polygons.push_back(g["coordinates"]);
    } else if (type == "MultiPolygon") {
      for (const auto& p : g["coordinates"]) polygons.push_back(p);
    } else {
      throw Error(ErrorCode::load, where + ": unsupported geometry type '" + type + "'");
    }
    for (const auto& poly : polygons) {
      if (!poly.is_array() || poly.empty()) throw Error(ErrorCode::load, where + ": empty polygon");
      c.rings.push_back(parse_ring(poly[0], i));
      if (poly.size() > 1) {
        warnings.push_back(where + " ('" + c.name + "'): " + std::to_string(poly.size() - 1) +
                           " interior ring(s) ignored");
      }
    }
    entries.push_back(std::move(c));
  }

  BoundarySet set(std::move(entries));
  for (auto& w : warnings) set.add_warning(std::move(w));
  return set;
}

std::optional<std::string> point_in_community(const GeoPoint& p, const BoundarySet& b) {
  for (const auto& c : b.entries()) {
    if (locate(c, p.latitude(), p.longitude()) != Location::outside) return c.name;
  }
  return std::nullopt;
}

namespace {

std::size_t ensure_column(Dataset& d, const std::string& name, ColumnKind kind) {
  if (const auto i = d.find_column(name)) {
    if (d.columns()[*i].kind != kind) {
      throw Error(ErrorCode::geocoding, "column '" + name + "' must be of kind " + std::string(to_string(kind)));
    }
    return *i;
  }
  return d.add_column({name, kind});
}

std::optional<std::string> text_of(const Value& v) {
  if (is_null(v)) return std::nullopt;
  std::string s(trim(format_value(v)));
  if (s.empty()) return std::nullopt;
  return s;
}

}  // namespace

Dataset geocode_dataset(const Dataset& d, const BoundarySet& b, const GeocodeColumns& cols,
                        GeocodeReport* report) {
  const bool has_coords = (d.has_column(cols.latitude) && d.has_column(cols.longitude)) ||
                          (!cols.point.empty() && d.has_column(cols.point));
  const bool has_names = d.has_column(cols.community);
  if (!has_coords && !has_names) {
    throw Error(ErrorCode::geocoding, "dataset '" + d.name() + "' has neither coordinates ('" + cols.latitude +
                                          "', '" + cols.longitude + "') nor community names ('" +
                                          cols.community + "')");
  }

  Dataset out = d;
  const auto point_col = cols.point.empty() ? std::nullopt : out.find_column(cols.point);
  const std::size_t lat_col = ensure_column(out, cols.latitude, ColumnKind::real);
  const std::size_t lon_col = ensure_column(out, cols.longitude, ColumnKind::real);
  const std::size_t name_col = ensure_column(out, cols.community, ColumnKind::text);
  const std::size_t source_col = ensure_column(out, cols.source, ColumnKind::text);

  GeocodeReport local;
  for (auto& row : out.mutable_rows()) {
    std::optional<double> lat = as_number(row[lat_col]);
    std::optional<double> lon = as_number(row[lon_col]);
    if ((!lat || !lon) && point_col) {
      if (const auto* p = std::get_if<LatLon>(&row[*point_col])) {
        lat = p->latitude;
        lon = p->longitude;
        row[lat_col] = *lat;
        row[lon_col] = *lon;
      }
    }
    const bool coords_ok = lat && lon && *lat >= -90.0 && *lat <= 90.0 && *lon >= -180.0 && *lon <= 180.0;
    const auto name = text_of(row[name_col]);

    std::string source;
    if (coords_ok && name) {
      source = "passthrough";
      ++local.passthrough;
    } else if (name) {
      if (const Community* c = b.find(*name)) {
        row[lat_col] = c->centroid.latitude();
        row[lon_col] = c->centroid.longitude();
        row[name_col] = c->name;
        source = "centroid";
        ++local.by_centroid;
      } else {
        source = "unresolved";
        ++local.unresolved;
      }
    } else if (coords_ok) {
      if (auto hit = point_in_community(GeoPoint(*lat, *lon), b)) {
        row[name_col] = std::move(*hit);
        source = "polygon";
        ++local.by_polygon;
      } else {
        row[name_col] = std::monostate{};
        source = "unresolved";
        ++local.unresolved;
      }
    } else {
      source = "unresolved";
      ++local.unresolved;
    }
    if (is_null(row[source_col])) row[source_col] = std::move(source);
  }
  if (report) *report = local;
  return out;
}

}  // namespace citysafe
