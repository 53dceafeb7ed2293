#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "citysafe/cluster.hpp"
#include "citysafe/error.hpp"
#include "citysafe/rng.hpp"
#include "json.hpp"

namespace citysafe::cluster {

PointSet::PointSet(std::vector<Point> points, std::vector<std::string> ids)
    : points_(std::move(points)), ids_(std::move(ids)) {
  if (points_.size() != ids_.size()) {
    throw Error(ErrorCode::invalid_argument, "point set has " + std::to_string(points_.size()) +
                                                 " points but " + std::to_string(ids_.size()) + " ids");
  }
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].lat) || !std::isfinite(points_[i].lon)) {
      throw Error(ErrorCode::invalid_argument, "point '" + ids_[i] + "' has non-finite coordinates");
    }
    if (!seen.insert(ids_[i]).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate point id '" + ids_[i] + "'");
    }
  }
}

namespace {

std::vector<std::string> positional_ids(std::size_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

}  // namespace

PointSet::PointSet(std::vector<Point> points) : PointSet(points, positional_ids(points.size())) {}

PointSet PointSet::sample(std::size_t n, std::uint64_t seed) const {
  if (n >= points_.size()) return *this;
  Rng rng(seed);
  auto picked = rng.sample(points_.size(), n);
  std::sort(picked.begin(), picked.end());
  std::vector<Point> pts;
  std::vector<std::string> ids;
  for (std::size_t i : picked) {
    pts.push_back(points_[i]);
    ids.push_back(ids_[i]);
  }
  return PointSet(std::move(pts), std::move(ids));
}

double distance(const Point& a, const Point& b, Metric metric) {
  if (metric == Metric::euclidean) return std::hypot(a.lat - b.lat, a.lon - b.lon);
  constexpr double kEarthRadiusKm = 6371.0088;
  constexpr double kRad = 3.14159265358979323846 / 180.0;
  const double dlat = (b.lat - a.lat) * kRad;
  const double dlon = (b.lon - a.lon) * kRad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * kRad) * std::cos(b.lat * kRad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

std::size_t Clustering::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

int relabel_contiguous(std::vector<int>& labels) {
  std::unordered_map<int, int> map;
  for (int& l : labels) {
    if (l == kNoise) continue;
    auto [it, fresh] = map.try_emplace(l, static_cast<int>(map.size()));
    l = it->second;
  }
  return static_cast<int>(map.size());
}

std::string_view algorithm_name(const ClusterParams& p) {
  constexpr std::string_view names[] = {"kmeans", "clarans", "dbscan", "optics", "agglo", "clique"};
  return names[p.index()];
}

std::string_view to_string(Linkage l) {
  switch (l) {
    case Linkage::ward: return "ward";
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
  }
  return "ward";
}

std::string params_to_json(const ClusterParams& p) {
  nlohmann::ordered_json j;
  j["algorithm"] = algorithm_name(p);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, KMeansParams>) {
          j["k"] = v.k;
          j["max_iter"] = v.max_iter;
          j["n_init"] = v.n_init;
          j["seed"] = v.seed;
        } else if constexpr (std::is_same_v<T, ClaransParams>) {
          j["k"] = v.k;
          j["numlocal"] = v.numlocal;
          j["maxneighbor"] = v.maxneighbor;
          j["seed"] = v.seed;
        } else if constexpr (std::is_same_v<T, DbscanParams>) {
          j["eps"] = v.eps;
          j["min_pts"] = v.min_pts;
        } else if constexpr (std::is_same_v<T, OpticsParams>) {
          j["eps"] = v.eps;
          j["min_pts"] = v.min_pts;
          j["extraction_eps"] = v.extraction_eps;
        } else if constexpr (std::is_same_v<T, AgglomerativeParams>) {
          j["n_clusters"] = v.n_clusters;
          j["linkage"] = to_string(v.linkage);
        } else {
          j["intervals"] = v.intervals;
          j["threshold"] = v.threshold;
        }
      },
      p);
  return j.dump();
}

Clustering run(const PointSet& ps, const ClusterParams& p, Metric metric) {
  return std::visit(
      [&](const auto& v) -> Clustering {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, KMeansParams>) {
          return kmeans(ps, v);
        } else if constexpr (std::is_same_v<T, ClaransParams>) {
          return clarans(ps, v, metric);
        } else if constexpr (std::is_same_v<T, DbscanParams>) {
          return dbscan(ps, v, metric);
        } else if constexpr (std::is_same_v<T, OpticsParams>) {
          return optics_cluster(ps, v, metric);
        } else if constexpr (std::is_same_v<T, AgglomerativeParams>) {
          return agglomerative(ps, v, metric);
        } else {
          return clique(ps, v);
        }
      },
      p);
}

}  // namespace citysafe::cluster
