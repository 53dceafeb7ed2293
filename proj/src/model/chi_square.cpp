#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "citysafe/error.hpp"
#include "citysafe/model.hpp"
#include "json.hpp"

namespace citysafe::model {

ChiSquare chi_square_test(const std::vector<std::vector<double>>& observed) {
  const std::size_t cols = observed.empty() ? 0 : observed.front().size();
  for (const auto& row : observed) {
    if (row.size() != cols) throw Error(ErrorCode::invalid_argument, "contingency table rows differ in length");
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::invalid_argument, "contingency counts must be finite and non-negative");
      }
    }
  }
  std::vector<double> row_sum(observed.size(), 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      row_sum[i] += observed[i][j];
      col_sum[j] += observed[i][j];
      total += observed[i][j];
    }
  }
  std::vector<std::size_t> rows_kept, cols_kept;
  for (std::size_t i = 0; i < row_sum.size(); ++i) {
    if (row_sum[i] > 0.0) rows_kept.push_back(i);
  }
  for (std::size_t j = 0; j < cols; ++j) {
    if (col_sum[j] > 0.0) cols_kept.push_back(j);
  }
  if (rows_kept.size() < 2 || cols_kept.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "contingency table needs at least 2 non-empty rows and columns");
  }

  ChiSquare out;
  for (std::size_t i : rows_kept) {
    for (std::size_t j : cols_kept) {
      const double expected = row_sum[i] * col_sum[j] / total;
      const double d = observed[i][j] - expected;
      out.statistic += d * d / expected;
    }
  }
  out.dof = static_cast<int>((rows_kept.size() - 1) * (cols_kept.size() - 1));
  out.p_value = chi_square_p_value(out.statistic, out.dof);
  return out;
}

double chi_square_p_value(double statistic, int dof) {
  if (dof < 1) throw Error(ErrorCode::invalid_argument, "chi-square needs dof >= 1");
  if (!(statistic > 0.0)) return 1.0;
  if (std::isinf(statistic)) return 0.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

std::vector<int> quantile_bins(std::span<const double> values, int bins) {
  if (bins < 1) throw Error(ErrorCode::invalid_argument, "quantile binning needs bins >= 1");
  std::vector<int> out(values.size(), 0);
  if (values.empty()) return out;

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double last = static_cast<double>(sorted.size() - 1);
  std::vector<double> edges;
  for (int i = 0; i <= bins; ++i) {
    const double pos = last * static_cast<double>(i) / static_cast<double>(bins);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    const double q = frac == 0.0 ? sorted[lo] : sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    if (edges.empty() || q > edges.back()) edges.push_back(q);
  }
  // Inner edges only: the outer two bound the data.
  if (edges.size() <= 2) return out;
  const auto inner_begin = edges.begin() + 1;
  const auto inner_end = edges.end() - 1;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<int>(std::lower_bound(inner_begin, inner_end, values[i]) - inner_begin);
  }
  return out;
}

std::vector<std::string> FeatureSelection::selected_names() const {
  std::vector<std::string> out;
  for (const auto& p : predictors) {
    if (p.selected) out.push_back(p.name);
  }
  return out;
}

FeatureSelection chi_square_select(const FeatureTable& table, std::string_view target,
                                   const std::vector<std::string>& predictors, double alpha, int bins) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::invalid_argument, "alpha must lie in (0, 1)");
  if (bins < 2) throw Error(ErrorCode::invalid_argument, "chi-square selection needs bins >= 2");
  const FeatureColumn& y = table.column(target);

  FeatureSelection out;
  out.target = std::string(target);
  out.alpha = alpha;
  out.bins = bins;
  for (const auto& name : predictors) {
    const FeatureColumn& x = table.column(name);
    PredictorTest test;
    test.name = name;

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < table.row_count(); ++i) {
      if (x.values[i] && y.values[i]) {
        xs.push_back(*x.values[i]);
        ys.push_back(*y.values[i]);
      }
    }
    const auto xb = quantile_bins(xs, bins);
    const auto yb = quantile_bins(ys, bins);
    std::vector<std::vector<double>> observed(static_cast<std::size_t>(bins), std::vector<double>(bins, 0.0));
    for (std::size_t i = 0; i < xs.size(); ++i) observed[yb[i]][xb[i]] += 1.0;
    try {
      const ChiSquare c = chi_square_test(observed);
      test.statistic = c.statistic;
      test.dof = c.dof;
      test.p_value = c.p_value;
      test.selected = c.p_value < alpha;
    } catch (const Error&) {
      test.note = "degenerate binning";
    }
    out.predictors.push_back(std::move(test));
  }
  return out;
}

std::string selection_to_json(const FeatureSelection& s) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["target"] = s.target;
  j["alpha"] = s.alpha;
  j["bins"] = s.bins;
  j["binning"] = "quantile";
  auto preds = ordered_json::array();
  for (const auto& p : s.predictors) {
    ordered_json e;
    e["name"] = p.name;
    e["chi2"] = p.statistic ? ordered_json(*p.statistic) : ordered_json(nullptr);
    e["dof"] = p.dof ? ordered_json(*p.dof) : ordered_json(nullptr);
    e["p_value"] = p.p_value ? ordered_json(*p.p_value) : ordered_json(nullptr);
    e["selected"] = p.selected;
    if (!p.note.empty()) e["note"] = p.note;
    preds.push_back(std::move(e));
  }
  j["predictors"] = std::move(preds);
  return j.dump(2) + "\n";
}

}  // namespace citysafe::model
