#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "citysafe/error.hpp"
#include "citysafe/model.hpp"
#include "citysafe/rng.hpp"

namespace citysafe::model {

double RegressionTree::predict(std::span<const double> x) const {
  int at = 0;
  while (nodes[at].feature >= 0) {
    const TreeNode& n = nodes[at];
    at = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[at].value;
}

double RandomForest::predict(std::span<const double> x) const {
  if (trees.empty()) throw Error(ErrorCode::invalid_argument, "predict on an empty forest");
  if (x.size() != importances.size()) {
    throw Error(ErrorCode::invalid_argument, "predict: expected " + std::to_string(importances.size()) +
                                                 " features, got " + std::to_string(x.size()));
  }
  double sum = 0.0, lo = 0.0, hi = 0.0;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const double v = trees[t].predict(x);
    sum += v;
    lo = t == 0 ? v : std::min(lo, v);
    hi = t == 0 ? v : std::max(hi, v);
  }
  return std::clamp(sum / static_cast<double>(trees.size()), lo, hi);
}

std::vector<double> RandomForest::predict(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x.row(i));
  return out;
}

namespace {

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  std::size_t left_size = 0;  // rows in the left child after sorting by feature
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const ForestParams& params, std::size_t mtry, Rng& rng)
      : x_(x), y_(y), params_(params), mtry_(mtry), rng_(rng), gains_(x.cols(), 0.0) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    struct Task {
      std::size_t begin, end;
      int depth;
      int node;
    };
    RegressionTree tree;
    tree.nodes.emplace_back();
    std::vector<Task> stack{{0, rows_.size(), 0, 0}};
    while (!stack.empty()) {
      const Task t = stack.back();
      stack.pop_back();
      const auto [value, sse] = summarize(t.begin, t.end);
      tree.nodes[t.node].value = value;

      const std::size_t size = t.end - t.begin;
      const bool depth_left = !params_.max_depth || t.depth < *params_.max_depth;
      if (!depth_left || size < 2 * static_cast<std::size_t>(params_.min_leaf) || sse <= 0.0) continue;
      const Candidate best = best_split(t.begin, t.end, sse);
      if (best.feature < 0) continue;

      // Order the node's rows by the winning feature; the left child is the prefix.
      sort_by(t.begin, t.end, static_cast<std::size_t>(best.feature));
      gains_[static_cast<std::size_t>(best.feature)] += best.gain;
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& n = tree.nodes[t.node];
      n.feature = best.feature;
      n.threshold = best.threshold;
      n.left = left;
      n.right = left + 1;
      const std::size_t mid = t.begin + best.left_size;
      stack.push_back({mid, t.end, t.depth + 1, left + 1});
      stack.push_back({t.begin, mid, t.depth + 1, left});
    }
    return tree;
  }

  const std::vector<double>& gains() const { return gains_; }

 private:
  std::pair<double, double> summarize(std::size_t begin, std::size_t end) const {
    double sum = 0.0, lo = y_[rows_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_[rows_[i]];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double mean = std::clamp(sum / static_cast<double>(end - begin), lo, hi);
    if (lo == hi) return {mean, 0.0};
    double sse = 0.0;
    for (std::size_t i = begin; i < end; ++i) sse += (y_[rows_[i]] - mean) * (y_[rows_[i]] - mean);
    return {mean, sse};
  }

  void sort_by(std::size_t begin, std::size_t end, std::size_t feature) {
    std::sort(rows_.begin() + static_cast<std::ptrdiff_t>(begin), rows_.begin() + static_cast<std::ptrdiff_t>(end),
              [&](std::size_t a, std::size_t b) {
                const double va = x_(a, feature), vb = x_(b, feature);
                return va < vb || (va == vb && a < b);
              });
  }

  /// Features are drawn without replacement until mtry non-constant ones were
  /// examined and a split with positive gain exists, or none are left.
  Candidate best_split(std::size_t begin, std::size_t end, double node_sse) {
    const std::size_t p = x_.cols();
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Candidate best;
    std::size_t examined = 0;
    const std::size_t min_leaf = static_cast<std::size_t>(params_.min_leaf);
    const std::size_t n = end - begin;
    const double tolerance = 1e-12 * node_sse;
    for (std::size_t k = 0; k < p; ++k) {
      if (examined >= mtry_ && best.feature >= 0) break;
      std::swap(order[k], order[k + rng_.index(p - k)]);
      const std::size_t f = order[k];
      sort_by(begin, end, f);
      if (x_(rows_[begin], f) == x_(rows_[end - 1], f)) continue;
      ++examined;

      double total = 0.0;
      for (std::size_t i = begin; i < end; ++i) total += y_[rows_[i]];
      double left_sum = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        left_sum += y_[rows_[begin + i - 1]];
        const double a = x_(rows_[begin + i - 1], f), b = x_(rows_[begin + i], f);
        if (a == b || i < min_leaf || n - i < min_leaf) continue;
        const double nl = static_cast<double>(i), nr = static_cast<double>(n - i);
        const double diff = left_sum / nl - (total - left_sum) / nr;
        const double gain = nl * nr / static_cast<double>(n) * diff * diff;
        if (gain > tolerance && gain > best.gain) {
          double threshold = a + (b - a) / 2.0;
          if (!(threshold < b)) threshold = a;
          best = {static_cast<int>(f), threshold, gain, i};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng& rng_;
  std::vector<std::size_t> rows_;
  std::vector<double> gains_;
};

}  // namespace

RandomForest rf_fit(const Matrix& x, std::span<const double> y, const ForestParams& params) {
  if (params.n_trees < 1) throw Error(ErrorCode::parameter, "random forest needs n_trees >= 1");
  if (params.max_depth && *params.max_depth < 1) throw Error(ErrorCode::parameter, "max_depth must be >= 1");
  if (params.min_leaf < 1) throw Error(ErrorCode::parameter, "min_leaf must be >= 1");
  if (params.max_features && *params.max_features < 1) {
    throw Error(ErrorCode::parameter, "max_features must be >= 1");
  }
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::fit, "random forest: empty design matrix");
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::fit, "random forest: " + std::to_string(x.rows()) + " rows vs " +
                                    std::to_string(y.size()) + " targets");
  }
  const std::size_t p = x.cols();
  const std::size_t mtry =
      params.max_features ? std::min<std::size_t>(static_cast<std::size_t>(*params.max_features), p)
                          : std::max<std::size_t>(1, (p + 2) / 3);
  const auto trees = static_cast<std::size_t>(params.n_trees);

  RandomForest forest;
  forest.trees.resize(trees);
  std::vector<std::vector<double>> gains(trees);

  auto grow = [&](std::size_t t) {
    Rng rng(mix_seed(params.seed ^ mix_seed(t + 1)));
    std::vector<std::size_t> rows(x.rows());
    if (params.bootstrap) {
      for (auto& r : rows) r = rng.index(x.rows());
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    TreeBuilder builder(x, y, params, mtry, rng);
    forest.trees[t] = builder.build(std::move(rows));
    gains[t] = builder.gains();
  };

  unsigned threads = params.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : params.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, trees));
  if (threads <= 1) {
    for (std::size_t t = 0; t < trees; ++t) grow(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < trees; t = next++) grow(t);
      });
    }
  }

  forest.importances.assign(p, 0.0);
  for (const auto& g : gains) {
    for (std::size_t j = 0; j < p; ++j) forest.importances[j] += g[j];
  }
  const double total = std::accumulate(forest.importances.begin(), forest.importances.end(), 0.0);
  if (total > 0.0) {
    for (double& v : forest.importances) v /= total;
  } else {
    forest.no_splits = true;
    std::fill(forest.importances.begin(), forest.importances.end(), 1.0 / static_cast<double>(p));
  }
  return forest;
}

}  // namespace citysafe::model
