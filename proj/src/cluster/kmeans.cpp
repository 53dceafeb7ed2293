#include <limits>
#include <map>

#include "citysafe/cluster.hpp"
#include "citysafe/error.hpp"
#include "citysafe/rng.hpp"

namespace citysafe::cluster {

namespace {

double sq_dist(const Point& a, const Point& b) {
  const double dy = a.lat - b.lat;
  const double dx = a.lon - b.lon;
  return dx * dx + dy * dy;
}

/// Nearest centroid; the current label wins ties so assignments cannot
/// oscillate between equidistant centroids.
bool assign(const PointSet& ps, const std::vector<Point>& centroids, std::vector<int>& labels) {
  bool changed = false;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    int best = labels[i];
    double best_d = best >= 0 ? sq_dist(ps[i], centroids[best]) : std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = sq_dist(ps[i], centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    if (best != labels[i]) {
      labels[i] = best;
      changed = true;
    }
  }
  return changed;
}

double sse_of(const PointSet& ps, const std::vector<Point>& centroids, const std::vector<int>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) s += sq_dist(ps[i], centroids[labels[i]]);
  return s;
}

/// Recomputes means; an emptied cluster takes over the point farthest from
/// its centroid (among clusters that can spare one).
void update(const PointSet& ps, std::vector<Point>& centroids, std::vector<int>& labels) {
  const std::size_t k = centroids.size();
  std::vector<double> sum_lat(k, 0.0), sum_lon(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    sum_lat[labels[i]] += ps[i].lat;
    sum_lon[labels[i]] += ps[i].lon;
    ++count[labels[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] > 0) {
      centroids[c] = {sum_lat[c] / static_cast<double>(count[c]), sum_lon[c] / static_cast<double>(count[c])};
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] > 0) continue;
    std::size_t far = ps.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (count[labels[i]] < 2) continue;
      const double d = sq_dist(ps[i], centroids[labels[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == ps.size()) break;
    --count[labels[far]];
    labels[far] = static_cast<int>(c);
    count[c] = 1;
    centroids[c] = ps[far];
  }
}

}  // namespace

double within_cluster_sse(const PointSet& ps, std::span<const int> labels) {
  std::map<int, std::pair<Point, std::size_t>> sums;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (labels[i] == kNoise) continue;
    auto& [s, n] = sums[labels[i]];
    s.lat += ps[i].lat;
    s.lon += ps[i].lon;
    ++n;
  }
  double out = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (labels[i] == kNoise) continue;
    const auto& [s, n] = sums[labels[i]];
    const Point mean{s.lat / static_cast<double>(n), s.lon / static_cast<double>(n)};
    out += sq_dist(ps[i], mean);
  }
  return out;
}

Clustering kmeans(const PointSet& ps, const KMeansParams& p, std::vector<double>* sse_trace) {
  if (p.k < 1) throw Error(ErrorCode::parameter, "kmeans needs k >= 1");
  if (p.max_iter < 1) throw Error(ErrorCode::parameter, "kmeans needs max_iter >= 1");
  if (p.n_init < 1) throw Error(ErrorCode::parameter, "kmeans needs n_init >= 1");

  // Distinct coordinates, first occurrence order.
  std::vector<std::size_t> distinct;
  {
    std::map<std::pair<double, double>, std::size_t> seen;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (seen.emplace(std::make_pair(ps[i].lat, ps[i].lon), i).second) distinct.push_back(i);
    }
  }
  if (static_cast<std::size_t>(p.k) > distinct.size()) {
    throw Error(ErrorCode::parameter, "kmeans k=" + std::to_string(p.k) + " exceeds the " +
                                          std::to_string(distinct.size()) + " distinct points");
  }

  Rng rng(p.seed);
  std::vector<int> best;
  std::vector<double> best_trace;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int run = 0; run < p.n_init; ++run) {
    std::vector<Point> centroids;
    for (std::size_t j : rng.sample(distinct.size(), static_cast<std::size_t>(p.k))) {
      centroids.push_back(ps[distinct[j]]);
    }
    std::vector<int> labels(ps.size(), -1);
    std::vector<double> trace;
    assign(ps, centroids, labels);
    trace.push_back(sse_of(ps, centroids, labels));
    for (int it = 0; it < p.max_iter; ++it) {
      update(ps, centroids, labels);
      const bool changed = assign(ps, centroids, labels);
      trace.push_back(sse_of(ps, centroids, labels));
      if (!changed) break;
    }
    if (trace.back() < best_sse) {
      best_sse = trace.back();
      best = std::move(labels);
      best_trace = std::move(trace);
    }
  }
  if (sse_trace) *sse_trace = std::move(best_trace);

  Clustering out;
  out.labels = std::move(best);
  out.n_clusters = relabel_contiguous(out.labels);
  out.params = p;
  return out;
}

}  // namespace citysafe::cluster
