#include <algorithm>
#include <limits>
#include <unordered_map>

#include "citysafe/cluster.hpp"
#include "citysafe/error.hpp"
#include "citysafe/rng.hpp"

namespace citysafe::cluster {

namespace {

/// Draws integers from [0, n) without repetition (sparse Fisher-Yates).
class UniqueDraws {
 public:
  UniqueDraws(std::uint64_t n, Rng& rng) : n_(n), rng_(&rng) {}

  bool exhausted() const { return drawn_ == n_; }

  std::uint64_t next() {
    const std::uint64_t j = drawn_ + rng_->index(static_cast<std::size_t>(n_ - drawn_));
    const std::uint64_t at_j = lookup(j);
    swapped_[j] = lookup(drawn_);
    ++drawn_;
    return at_j;
  }

 private:
  std::uint64_t lookup(std::uint64_t i) const {
    const auto it = swapped_.find(i);
    return it == swapped_.end() ? i : it->second;
  }

  std::uint64_t n_;
  std::uint64_t drawn_ = 0;
  Rng* rng_;
  std::unordered_map<std::uint64_t, std::uint64_t> swapped_;
};

/// A node of the search graph: k medoids plus, per point, the nearest and
/// second-nearest medoid distances so a swap costs O(n) to evaluate.
struct Node {
  std::vector<std::size_t> medoids;
  std::vector<int> nearest;  // position in medoids
  std::vector<double> d1, d2;
  double cost = 0.0;

  void refresh(const PointSet& ps, Metric metric) {
    const std::size_t n = ps.size();
    nearest.assign(n, 0);
    d1.assign(n, std::numeric_limits<double>::infinity());
    d2.assign(n, std::numeric_limits<double>::infinity());
    cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < medoids.size(); ++m) {
        const double d = distance(ps[i], ps[medoids[m]], metric);
        if (d < d1[i]) {
          d2[i] = d1[i];
          d1[i] = d;
          nearest[i] = static_cast<int>(m);
        } else if (d < d2[i]) {
          d2[i] = d;
        }
      }
      cost += d1[i];
    }
  }

  /// Cost after replacing medoids[slot] with point h.
  double swap_cost(const PointSet& ps, std::size_t slot, std::size_t h, Metric metric) const {
    double c = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const double dh = distance(ps[i], ps[h], metric);
      const double keep = nearest[i] == static_cast<int>(slot) ? d2[i] : d1[i];
      c += std::min(keep, dh);
    }
    return c;
  }
};

}  // namespace

double medoid_cost(const PointSet& ps, std::span<const std::size_t> medoids, Metric metric) {
  double cost = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : medoids) best = std::min(best, distance(ps[i], ps[m], metric));
    cost += best;
  }
  return cost;
}

Clustering clarans(const PointSet& ps, const ClaransParams& p, Metric metric, ClaransTrace* trace) {
  const std::size_t n = ps.size();
  if (p.k < 1) throw Error(ErrorCode::parameter, "clarans needs k >= 1");
  if (static_cast<std::size_t>(p.k) > n) {
    throw Error(ErrorCode::parameter,
                "clarans k=" + std::to_string(p.k) + " exceeds the " + std::to_string(n) + " points");
  }
  if (p.numlocal < 1) throw Error(ErrorCode::parameter, "clarans needs numlocal >= 1");
  if (p.maxneighbor < 0) throw Error(ErrorCode::parameter, "clarans needs maxneighbor >= 0");

  const std::size_t k = static_cast<std::size_t>(p.k);
  const std::uint64_t neighbours = static_cast<std::uint64_t>(k) * (n - k);
  Rng rng(p.seed);
  ClaransTrace local;

  Node best;
  double min_cost = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < p.numlocal; ++restart) {
    Node current;
    current.medoids = rng.sample(n, k);
    current.refresh(ps, metric);
    local.initial_costs.push_back(current.cost);

    std::vector<char> is_medoid(n, 0);
    for (std::size_t m : current.medoids) is_medoid[m] = 1;

    UniqueDraws draws(neighbours, rng);
    int j = 1;
    while (j <= p.maxneighbor && !draws.exhausted()) {
      // Neighbour id -> (medoid slot, rank among non-medoids).
      const std::uint64_t id = draws.next();
      const std::size_t slot = static_cast<std::size_t>(id / (n - k));
      std::size_t rank = static_cast<std::size_t>(id % (n - k));
      std::size_t h = 0;
      for (;; ++h) {
        if (is_medoid[h]) continue;
        if (rank == 0) break;
        --rank;
      }
      const double c = current.swap_cost(ps, slot, h, metric);
      if (c < current.cost) {
        is_medoid[current.medoids[slot]] = 0;
        is_medoid[h] = 1;
        current.medoids[slot] = h;
        current.refresh(ps, metric);
        local.accepted_costs.push_back(current.cost);
        draws = UniqueDraws(neighbours, rng);
        j = 1;
      } else {
        ++j;
      }
    }
    local.local_minima.push_back(current.cost);
    if (current.cost < min_cost) {
      min_cost = current.cost;
      best = std::move(current);
    }
  }

  // Label by nearest medoid, medoids ordered by point index.
  std::vector<std::size_t> order = best.medoids;
  std::sort(order.begin(), order.end());
  Clustering out;
  out.labels.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < order.size(); ++m) {
      const double d = distance(ps[i], ps[order[m]], metric);
      if (d < bd) {
        bd = d;
        out.labels[i] = static_cast<int>(m);
      }
    }
  }
  out.n_clusters = relabel_contiguous(out.labels);
  out.params = p;

  if (trace) {
    local.best_medoids = order;
    local.best_cost = min_cost;
    *trace = std::move(local);
  }
  return out;
}

}  // namespace citysafe::cluster
