#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "citysafe/error.hpp"
#include "citysafe/model.hpp"
#include "citysafe/rng.hpp"

namespace citysafe::model {

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= rows_) throw Error(ErrorCode::invalid_argument, "row index out of range");
    for (std::size_t c = 0; c < cols_; ++c) out(r, c) = (*this)(rows[r], c);
  }
  return out;
}

Split train_test_split(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::split, "test fraction must lie in (0, 1)");
  }
  if (n < 2) throw Error(ErrorCode::split, "cannot split " + std::to_string(n) + " rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  auto test_size = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * test_fraction));
  test_size = std::min(test_size, n);
  Split s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_size));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(test_size), order.end());
  return s;
}

Evaluation evaluate(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorCode::evaluation, "evaluate: " + std::to_string(y_true.size()) + " targets vs " +
                                           std::to_string(y_pred.size()) + " predictions");
  }
  if (y_true.empty()) throw Error(ErrorCode::evaluation, "evaluate: no observations");
  const double n = static_cast<double>(y_true.size());
  const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double r = y_true[i] - y_pred[i];
    const double t = y_true[i] - mean;
    ss_res += r * r;
    ss_tot += t * t;
  }
  Evaluation e;
  e.mse = ss_res / n;
  if (ss_tot == 0.0) {
    e.r2 = 0.0;
    e.zero_variance = true;
  } else {
    e.r2 = 1.0 - ss_res / ss_tot;
  }
  return e;
}

double OlsModel::predict(std::span<const double> x) const {
  if (x.size() != coefficients.size()) {
    throw Error(ErrorCode::invalid_argument, "predict: expected " + std::to_string(coefficients.size()) +
                                                 " features, got " + std::to_string(x.size()));
  }
  double y = intercept;
  for (std::size_t j = 0; j < x.size(); ++j) y += coefficients[j] * x[j];
  return y;
}

std::vector<double> OlsModel::predict(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x.row(i));
  return out;
}

OlsModel ols_fit(const Matrix& x, std::span<const double> y) {
  if (x.rows() == 0) throw Error(ErrorCode::fit, "ols: empty design matrix");
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::fit,
                "ols: " + std::to_string(x.rows()) + " rows vs " + std::to_string(y.size()) + " targets");
  }
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto p = static_cast<Eigen::Index>(x.cols());

  // Centering absorbs the intercept, so the minimum-norm solution of a
  // deficient design never leaks into it.
  Eigen::VectorXd means = Eigen::VectorXd::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) means(j) += x(i, j);
  }
  means /= static_cast<double>(n);
  const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  OlsModel m;
  m.coefficients.assign(x.cols(), 0.0);
  if (p > 0) {
    Eigen::MatrixXd a(n, p);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) a(i, j) = x(i, j) - means(j);
      b(i) = y[i] - y_mean;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    const Eigen::VectorXd beta = cod.solve(b);
    for (Eigen::Index j = 0; j < p; ++j) m.coefficients[j] = beta(j);
    m.rank = static_cast<std::size_t>(cod.rank());
  }
  m.rank_deficient = m.rank < x.cols();
  m.intercept = y_mean;
  for (std::size_t j = 0; j < x.cols(); ++j) m.intercept -= m.coefficients[j] * means(static_cast<Eigen::Index>(j));
  ++m.rank;  // the intercept column
  return m;
}

std::vector<double> standardized_importances(const OlsModel& m, const Matrix& x) {
  if (m.coefficients.size() != x.cols()) {
    throw Error(ErrorCode::invalid_argument, "importances: model and design disagree on feature count");
  }
  const std::size_t p = x.cols();
  std::vector<double> out(p, 0.0);
  if (p == 0) return out;
  const double n = static_cast<double>(x.rows());
  double total = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
    out[j] = std::abs(m.coefficients[j]) * std::sqrt(var / n);
    total += out[j];
  }
  for (double& v : out) v = total > 0.0 ? v / total : 1.0 / static_cast<double>(p);
  return out;
}

}  // namespace citysafe::model
