#include <deque>

#include "citysafe/cluster.hpp"
#include "citysafe/error.hpp"
#include "neighbors.hpp"

namespace citysafe::cluster {

Clustering dbscan(const PointSet& ps, const DbscanParams& p, Metric metric) {
  if (!(p.eps > 0.0)) throw Error(ErrorCode::parameter, "dbscan needs eps > 0");
  if (p.min_pts < 1) throw Error(ErrorCode::parameter, "dbscan needs min_pts >= 1");

  const std::size_t n = ps.size();
  const detail::RadiusIndex index(ps, p.eps, metric);
  constexpr int kUnvisited = -2;
  std::vector<int> labels(n, kUnvisited);
  std::vector<std::size_t> neighbours;
  std::vector<std::size_t> expand;
  int cluster = 0;

  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnvisited) continue;
    index.query(i, neighbours);
    if (neighbours.size() < static_cast<std::size_t>(p.min_pts)) {
      // May still be claimed later as a border point.
      labels[i] = kNoise;
      continue;
    }
    labels[i] = cluster;
    std::deque<std::size_t> queue(neighbours.begin(), neighbours.end());
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      if (labels[q] == kNoise) labels[q] = cluster;
      if (labels[q] != kUnvisited) continue;
      labels[q] = cluster;
      index.query(q, expand);
      if (expand.size() >= static_cast<std::size_t>(p.min_pts)) {
        for (std::size_t r : expand) {
          if (labels[r] == kUnvisited || labels[r] == kNoise) queue.push_back(r);
        }
      }
    }
    ++cluster;
  }

  Clustering out;
  out.labels = std::move(labels);
  out.n_clusters = cluster;
  out.params = p;
  return out;
}

}  // namespace citysafe::cluster
