#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citysafe/features.hpp"

namespace citysafe::model {

struct CorrelationMatrix {
  std::vector<std::string> names;
  /// r[i][j]; null when either column is constant over the rows both share.
  std::vector<std::vector<std::optional<double>>> r;
};

/// Pearson r over the rows where both values are present; null when fewer
/// than two such rows exist or either side is constant.
std::optional<double> pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y);

/// Pairwise-complete Pearson matrix. Throws ErrorCode::invalid_argument with
/// fewer than two rows and ErrorCode::unknown_metric for unknown columns.
CorrelationMatrix pearson_matrix(const FeatureTable& table, const std::vector<std::string>& columns);

std::string correlation_to_csv(const CorrelationMatrix& m);
std::string correlation_to_json(const CorrelationMatrix& m);

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Independence test on an r x c table of observed counts. Rows and columns
/// with zero margin are dropped first. Throws ErrorCode::invalid_argument when
/// fewer than two rows or columns remain.
ChiSquare chi_square_test(const std::vector<std::vector<double>>& observed);

/// Upper tail of the chi-square distribution.
double chi_square_p_value(double statistic, int dof);

/// Quantile bin per value: edges at the i/bins quantiles (linear
/// interpolation), duplicate edges merged, intervals closed on the right
/// with the lowest edge included in bin 0. Returns the bin indices; every
/// index is < bins.
std::vector<int> quantile_bins(std::span<const double> values, int bins);

struct PredictorTest {
  std::string name;
  std::optional<double> statistic;
  std::optional<int> dof;
  std::optional<double> p_value;
  bool selected = false;
  std::string note;
};

struct FeatureSelection {
  std::string target;
  double alpha = 0.05;
  int bins = 4;
  std::vector<PredictorTest> predictors;

  std::vector<std::string> selected_names() const;
};

/// Quantile-bins target and each predictor, runs the independence test and
/// selects predictors with p < alpha. Degenerate binnings leave the predictor
/// unselected with a null statistic.
FeatureSelection chi_square_select(const FeatureTable& table, std::string_view target,
                                   const std::vector<std::string>& predictors, double alpha = 0.05, int bins = 4);

std::string selection_to_json(const FeatureSelection& s);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle of 0..n-1; the first ceil(n * test_fraction) go to test.
/// Throws ErrorCode::split when n < 2 or the fraction is outside (0, 1).
Split train_test_split(std::size_t n, double test_fraction, std::uint64_t seed);

struct Evaluation {
  double mse = 0.0;
  double r2 = 0.0;
  bool zero_variance = false;  // r2 forced to 0
};

/// Throws ErrorCode::evaluation on a length mismatch or empty input.
Evaluation evaluate(std::span<const double> y_true, std::span<const double> y_pred);

/// Dense row-major design matrix without the intercept column.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Matrix select_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct OlsModel {
  double intercept = 0.0;
  std::vector<double> coefficients;
  std::size_t rank = 0;
  bool rank_deficient = false;

  double predict(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& x) const;
};

/// Least squares with intercept via a complete orthogonal decomposition;
/// rank-deficient designs get the minimum-norm solution. Throws
/// ErrorCode::fit on empty input or a length mismatch.
OlsModel ols_fit(const Matrix& x, std::span<const double> y);

/// |b_j * sd(x_j)| normalized to sum 1 (uniform when every term is zero).
std::vector<double> standardized_importances(const OlsModel& m, const Matrix& x);

struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_depth;  // unlimited when empty
  int min_leaf = 1;
  std::uint64_t seed = 0;
  bool bootstrap = true;
  /// Features tried per split; ceil(p / 3) (at least 1) when empty.
  std::optional<int> max_features;
  unsigned threads = 1;  // 0 = hardware concurrency
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;
  int right = -1;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
};

struct RandomForest {
  std::vector<RegressionTree> trees;
  /// Total squared-error reduction per feature, normalized to sum 1.
  std::vector<double> importances;
  bool no_splits = false;  // importances are uniform because no tree split

  double predict(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& x) const;
};

/// Bagged variance-reduction regression trees. Each tree draws its RNG from
/// (seed, tree index), so the thread count never changes the result. Throws
/// ErrorCode::parameter for n_trees < 1, max_depth < 1 or min_leaf < 1 and
/// ErrorCode::fit on empty input.
RandomForest rf_fit(const Matrix& x, std::span<const double> y, const ForestParams& params);

struct ModelReport {
  std::string kind;  // "ols" | "random_forest"
  std::string target;
  std::vector<std::string> features;
  std::optional<double> intercept;
  std::vector<double> coefficients;
  std::vector<double> importances;
  std::string importance_kind;
  Evaluation train;
  Evaluation test;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::uint64_t seed = 0;
  std::string hyperparameters_json = "{}";
  std::vector<std::string> warnings;
};

std::string report_to_json(const ModelReport& r);

struct AnalysisOptions {
  double alpha = 0.05;
  int bins = 4;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  ForestParams forest;
};

struct TargetAnalysis {
  FeatureSelection selection;
  ModelReport ols;
  ModelReport forest;
};

/// Selection, 80/20 split (by default), OLS and forest fits for one target.
/// Rows with a null target or predictor are dropped. When no predictor is
/// selected all candidates are used and a warning is recorded.
TargetAnalysis analyze_target(const FeatureTable& table, std::string_view target,
                              const std::vector<std::string>& candidates, const AnalysisOptions& options);

struct ImportanceRow {
  std::string feature;
  double importance = 0.0;
};

/// Descending importances, ties by feature name.
std::vector<ImportanceRow> ranked_importances(const ModelReport& r);

/// Per target and model kind, the ranked importance table as JSON.
std::string importance_report_json(const std::vector<TargetAnalysis>& analyses);

}  // namespace citysafe::model
