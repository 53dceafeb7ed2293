#include <algorithm>
#include <cmath>
#include <deque>

#include "citysafe/cluster.hpp"
#include "citysafe/error.hpp"

namespace citysafe::cluster {

namespace {

/// Cell of v among `intervals` equal slices of [lo, hi]. A value on an
/// inner edge goes to the upper cell; hi closes the last cell.
std::size_t slot(double v, double lo, double hi, std::size_t intervals) {
  if (!(hi > lo)) return 0;
  const double width = (hi - lo) / static_cast<double>(intervals);
  const double pos = std::floor((v - lo) / width);
  if (pos < 0.0) return 0;
  return std::min(static_cast<std::size_t>(pos), intervals - 1);
}

}  // namespace

Clustering clique(const PointSet& ps, const CliqueParams& p) {
  if (p.intervals < 1) throw Error(ErrorCode::parameter, "clique needs intervals >= 1");
  if (p.threshold < 0) throw Error(ErrorCode::parameter, "clique needs threshold >= 0");

  Clustering out;
  out.params = p;
  const std::size_t n = ps.size();
  out.labels.assign(n, kNoise);
  if (n == 0) return out;

  const std::size_t m = static_cast<std::size_t>(p.intervals);
  double lat_lo = ps[0].lat, lat_hi = ps[0].lat, lon_lo = ps[0].lon, lon_hi = ps[0].lon;
  for (const auto& pt : ps.points()) {
    lat_lo = std::min(lat_lo, pt.lat);
    lat_hi = std::max(lat_hi, pt.lat);
    lon_lo = std::min(lon_lo, pt.lon);
    lon_hi = std::max(lon_hi, pt.lon);
  }

  std::vector<std::size_t> cell_of(n);
  std::vector<std::size_t> counts(m * m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = slot(ps[i].lat, lat_lo, lat_hi, m);
    const std::size_t c = slot(ps[i].lon, lon_lo, lon_hi, m);
    cell_of[i] = r * m + c;
    ++counts[cell_of[i]];
  }

  // Connected components of dense cells, numbered in row-major cell order so
  // the labelling does not depend on point order.
  constexpr int kUnset = -1;
  std::vector<int> component(m * m, kUnset);
  int next = 0;
  for (std::size_t start = 0; start < m * m; ++start) {
    if (counts[start] <= static_cast<std::size_t>(p.threshold) || component[start] != kUnset) continue;
    std::deque<std::size_t> queue{start};
    component[start] = next;
    while (!queue.empty()) {
      const std::size_t cell = queue.front();
      queue.pop_front();
      const std::size_t r = cell / m, c = cell % m;
      const std::size_t adjacent[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& a : adjacent) {
        // Unsigned wrap-around puts out-of-grid neighbours >= m.
        if (a[0] >= m || a[1] >= m) continue;
        const std::size_t nb = a[0] * m + a[1];
        if (counts[nb] <= static_cast<std::size_t>(p.threshold) || component[nb] != kUnset) continue;
        component[nb] = next;
        queue.push_back(nb);
      }
    }
    ++next;
  }

  for (std::size_t i = 0; i < n; ++i) out.labels[i] = component[cell_of[i]];
  out.n_clusters = next;
  return out;
}

}  // namespace citysafe::cluster
