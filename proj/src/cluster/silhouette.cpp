#include <algorithm>
#include <limits>
#include <map>

#include "citysafe/cluster.hpp"
#include "citysafe/error.hpp"

namespace citysafe::cluster {

double silhouette(const PointSet& ps, std::span<const int> labels, Metric metric) {
  if (labels.size() != ps.size()) {
    throw Error(ErrorCode::invalid_argument, "silhouette: " + std::to_string(labels.size()) + " labels for " +
                                                 std::to_string(ps.size()) + " points");
  }
  // Dense cluster slots for the non-noise labels.
  std::map<int, std::size_t> slot_of;
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoise) continue;
    slot_of.try_emplace(labels[i], slot_of.size());
    members.push_back(i);
  }
  const std::size_t k = slot_of.size();
  if (k < 2 || members.size() < 2) {
    throw Error(ErrorCode::undefined_score, "silhouette needs at least two clusters of non-noise points (found " +
                                                std::to_string(k) + ")");
  }
  std::vector<std::size_t> slot(labels.size(), 0);
  std::vector<std::size_t> size(k, 0);
  for (std::size_t i : members) {
    slot[i] = slot_of[labels[i]];
    ++size[slot[i]];
  }

  std::vector<double> sums(k);
  double total = 0.0;
  for (std::size_t i : members) {
    if (size[slot[i]] == 1) continue;  // singleton scores 0
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j : members) {
      if (j != i) sums[slot[j]] += distance(ps[i], ps[j], metric);
    }
    const double a = sums[slot[i]] / static_cast<double>(size[slot[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != slot[i]) b = std::min(b, sums[c] / static_cast<double>(size[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(members.size());
}

}  // namespace citysafe::cluster
