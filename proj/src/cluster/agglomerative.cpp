#include <algorithm>
#include <cmath>
#include <limits>

#include "citysafe/cluster.hpp"
#include "citysafe/error.hpp"

namespace citysafe::cluster {

namespace {

/// Condensed symmetric matrix, i != j.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n) : n_(n), data_(n * (n - 1) / 2) {}

  double& at(std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return data_[offset(i) + (j - i - 1)];
  }
  double at(std::size_t i, std::size_t j) const { return const_cast<DistanceMatrix*>(this)->at(i, j); }

 private:
  std::size_t offset(std::size_t i) const { return i * (2 * n_ - i - 1) / 2; }

  std::size_t n_;
  std::vector<double> data_;
};

}  // namespace

std::vector<Merge> agglomerative_merges(const PointSet& ps, Linkage linkage, Metric metric, std::size_t stop_at) {
  const std::size_t n = ps.size();
  if (n > kMaxAgglomerativePoints) {
    throw Error(ErrorCode::parameter, "agglomerative clustering is limited to " +
                                          std::to_string(kMaxAgglomerativePoints) + " points; got " +
                                          std::to_string(n) + " (subsample first)");
  }
  if (linkage == Linkage::ward && metric != Metric::euclidean) {
    throw Error(ErrorCode::parameter, "ward linkage requires the euclidean metric");
  }
  if (n < 2 || stop_at >= n) return {};
  if (stop_at < 1) stop_at = 1;

  // Ward works on squared distances so Lance-Williams stays exact.
  const bool squared = linkage == Linkage::ward;
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = distance(ps[i], ps[j], metric);
      d.at(i, j) = squared ? dist * dist : dist;
    }
  }

  std::vector<std::size_t> size(n, 1);
  std::vector<char> active(n, 1);
  std::vector<std::size_t> nn(n, n);
  std::vector<double> nnd(n, std::numeric_limits<double>::infinity());

  auto recompute = [&](std::size_t i) {
    nn[i] = n;
    nnd[i] = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      const double v = d.at(i, j);
      if (v < nnd[i]) {
        nnd[i] = v;
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) recompute(i);

  std::vector<Merge> merges;
  std::size_t clusters = n;
  while (clusters > stop_at) {
    // Smallest distance; among equals the smallest (a, b) pair. The first
    // index attaining the minimum is a, and its nn (ties -> smallest) is b.
    std::size_t a = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || nn[i] == n) continue;
      if (a == n || nnd[i] < nnd[a]) a = i;
    }
    const std::size_t b = nn[a];
    const double dab = nnd[a];

    const double na = static_cast<double>(size[a]);
    const double nb = static_cast<double>(size[b]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      const double dka = d.at(k, a), dkb = d.at(k, b);
      double updated = 0.0;
      switch (linkage) {
        case Linkage::complete:
          updated = std::max(dka, dkb);
          break;
        case Linkage::average:
          updated = (na * dka + nb * dkb) / (na + nb);
          break;
        case Linkage::ward: {
          const double nk = static_cast<double>(size[k]);
          updated = ((nk + na) * dka + (nk + nb) * dkb - nk * dab) / (nk + na + nb);
          break;
        }
      }
      d.at(k, a) = updated;
    }
    active[b] = 0;
    size[a] += size[b];
    --clusters;
    merges.push_back({a, b, squared ? std::sqrt(std::max(0.0, dab)) : dab, size[a]});

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k]) continue;
      if (k == a || nn[k] == a || nn[k] == b) {
        recompute(k);
        continue;
      }
      const double v = d.at(k, a);
      if (v < nnd[k] || (v == nnd[k] && a < nn[k])) {
        nnd[k] = v;
        nn[k] = a;
      }
    }
  }
  return merges;
}

Clustering agglomerative(const PointSet& ps, const AgglomerativeParams& p, Metric metric) {
  const std::size_t n = ps.size();
  if (p.n_clusters < 1) throw Error(ErrorCode::parameter, "agglomerative needs n_clusters >= 1");
  if (static_cast<std::size_t>(p.n_clusters) > n) {
    throw Error(ErrorCode::parameter, "agglomerative n_clusters=" + std::to_string(p.n_clusters) +
                                          " exceeds the " + std::to_string(n) + " points");
  }
  const auto merges = agglomerative_merges(ps, p.linkage, metric, static_cast<std::size_t>(p.n_clusters));

  // Union the merge pairs; each cluster is named by its smallest point index.
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& m : merges) parent[find(m.b)] = find(m.a);

  Clustering out;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = static_cast<int>(find(i));
  out.n_clusters = relabel_contiguous(out.labels);
  out.params = p;
  return out;
}

}  // namespace citysafe::cluster
