#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "citysafe/cluster.hpp"

namespace citysafe::cluster::detail {

/// Fixed-radius neighbour queries. Euclidean queries use a uniform grid with
/// cell side eps; other metrics fall back to a linear scan. Results are in
/// ascending index order and include the query point itself.
class RadiusIndex {
 public:
  RadiusIndex(const PointSet& ps, double eps, Metric metric) : ps_(ps), eps_(eps), metric_(metric) {
    use_grid_ = metric == Metric::euclidean && eps > 0.0 && std::isfinite(eps);
    if (!use_grid_) return;
    for (std::size_t i = 0; i < ps.size(); ++i) cells_[key(cell_of(ps[i].lat), cell_of(ps[i].lon))].push_back(i);
  }

  void query(std::size_t i, std::vector<std::size_t>& out, std::vector<double>* dists = nullptr) const {
    out.clear();
    if (dists) dists->clear();
    const Point& p = ps_[i];
    auto consider = [&](std::size_t j) {
      const double d = distance(p, ps_[j], metric_);
      if (d <= eps_) {
        out.push_back(j);
        if (dists) dists->push_back(d);
      }
    };
    if (!use_grid_) {
      for (std::size_t j = 0; j < ps_.size(); ++j) consider(j);
      return;
    }
    const std::int64_t ci = cell_of(p.lat), cj = cell_of(p.lon);
    for (std::int64_t di = -1; di <= 1; ++di) {
      for (std::int64_t dj = -1; dj <= 1; ++dj) {
        const auto it = cells_.find(key(ci + di, cj + dj));
        if (it == cells_.end()) continue;
        for (std::size_t j : it->second) consider(j);
      }
    }
    if (dists) {
      std::vector<std::size_t> order(out.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out[a] < out[b]; });
      std::vector<std::size_t> idx(out.size());
      std::vector<double> d(out.size());
      for (std::size_t k = 0; k < order.size(); ++k) {
        idx[k] = out[order[k]];
        d[k] = (*dists)[order[k]];
      }
      out.swap(idx);
      dists->swap(d);
    } else {
      std::sort(out.begin(), out.end());
    }
  }

 private:
  std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / eps_)); }

  static std::uint64_t key(std::int64_t a, std::int64_t b) {
    return (static_cast<std::uint64_t>(a) * 0x9E3779B97F4A7C15ULL) ^ static_cast<std::uint64_t>(b);
  }

  const PointSet& ps_;
  double eps_;
  Metric metric_;
  bool use_grid_ = false;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace citysafe::cluster::detail
