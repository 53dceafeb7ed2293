#include <queue>

#include "citysafe/cluster.hpp"
#include "citysafe/error.hpp"
#include "neighbors.hpp"

namespace citysafe::cluster {

std::vector<OpticsEntry> optics(const PointSet& ps, const OpticsParams& p, Metric metric) {
  if (!(p.eps >= 0.0)) throw Error(ErrorCode::parameter, "optics needs eps >= 0");
  if (p.min_pts < 1) throw Error(ErrorCode::parameter, "optics needs min_pts >= 1");

  const std::size_t n = ps.size();
  const std::size_t min_pts = static_cast<std::size_t>(p.min_pts);
  const detail::RadiusIndex index(ps, p.eps, metric);

  std::vector<char> processed(n, 0);
  std::vector<std::optional<double>> reach(n);
  std::vector<OpticsEntry> order;
  order.reserve(n);

  std::vector<std::size_t> nb;
  std::vector<double> nd;
  using Seed = std::pair<double, std::size_t>;
  std::priority_queue<Seed, std::vector<Seed>, std::greater<>> seeds;

  // Emits `q`, and if it is a core point pushes improved reachabilities.
  auto process = [&](std::size_t q) {
    index.query(q, nb, &nd);
    processed[q] = 1;
    std::optional<double> core;
    if (nb.size() >= min_pts) {
      std::vector<double> sorted = nd;
      std::nth_element(sorted.begin(), sorted.begin() + (min_pts - 1), sorted.end());
      core = sorted[min_pts - 1];
    }
    order.push_back({q, reach[q], core});
    if (!core) return;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const std::size_t o = nb[k];
      if (processed[o]) continue;
      const double r = std::max(*core, nd[k]);
      if (!reach[o] || r < *reach[o]) {
        reach[o] = r;
        seeds.emplace(r, o);
      }
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (processed[i]) continue;
    process(i);
    while (!seeds.empty()) {
      const auto [r, q] = seeds.top();
      seeds.pop();
      // Stale heap entries: already emitted or superseded by a smaller value.
      if (processed[q] || r != *reach[q]) continue;
      process(q);
    }
  }
  return order;
}

Clustering optics_extract(std::span<const OpticsEntry> ordering, const OpticsParams& p) {
  if (!(p.extraction_eps > 0.0)) throw Error(ErrorCode::parameter, "optics extraction needs extraction_eps > 0");
  Clustering out;
  out.labels.assign(ordering.size(), kNoise);
  int cluster = -1;
  for (const auto& e : ordering) {
    if (e.index >= ordering.size()) throw Error(ErrorCode::invalid_argument, "optics ordering index out of range");
    if (!e.reachability || *e.reachability > p.extraction_eps) {
      if (e.core_distance && *e.core_distance <= p.extraction_eps) {
        ++cluster;
        out.labels[e.index] = cluster;
      } else {
        out.labels[e.index] = kNoise;
      }
    } else {
      out.labels[e.index] = cluster;
    }
  }
  out.n_clusters = cluster + 1;
  out.params = p;
  return out;
}

Clustering optics_cluster(const PointSet& ps, const OpticsParams& p, Metric metric) {
  if (!(p.extraction_eps > 0.0)) throw Error(ErrorCode::parameter, "optics extraction needs extraction_eps > 0");
  const auto ordering = optics(ps, p, metric);
  Clustering c = optics_extract(ordering, p);
  // A border point visited before any of its core neighbours has no
  // reachability and comes out as noise; hand it to the first core point
  // (in ordering) within extraction_eps, as DBSCAN would.
  std::vector<std::size_t> cores;
  for (const auto& e : ordering) {
    if (e.core_distance && *e.core_distance <= p.extraction_eps) cores.push_back(e.index);
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (c.labels[i] != kNoise) continue;
    for (std::size_t j : cores) {
      if (distance(ps[i], ps[j], metric) <= p.extraction_eps) {
        c.labels[i] = c.labels[j];
        break;
      }
    }
  }
  return c;
}

}  // namespace citysafe::cluster
