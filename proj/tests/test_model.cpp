#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <set>

#include "citysafe/error.hpp"
#include "citysafe/model.hpp"
#include "citysafe/rng.hpp"
#include "oracles.hpp"

using namespace citysafe;
using namespace citysafe::model;

namespace {

std::vector<std::optional<double>> opt(const std::vector<double>& v) { return {v.begin(), v.end()}; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

Matrix matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.uniform(-5, 5);
  }
  return m;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("pearson examples") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y, neg;
  for (double v : x) y.push_back(2 * v + 3), neg.push_back(-v);
  CHECK(std::abs(*pearson(opt(x), opt(y)) - 1.0) < 1e-12);
  CHECK(std::abs(*pearson(opt(x), opt(neg)) + 1.0) < 1e-12);
  CHECK(*pearson(opt({1, 2, 3}), opt({1, 3, 2})) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(pearson(opt({1, 2, 3}), opt({4, 4, 4})).has_value());
}

TEST_CASE("pearson drops incomplete pairs") {
  const std::vector<std::optional<double>> x{1, 2, std::nullopt, 3};
  const std::vector<std::optional<double>> y{1, 3, 100, 2};
  CHECK(*pearson(x, y) == doctest::Approx(0.5));
}

TEST_CASE("correlation matrix") {
  FeatureTable t({"a", "b", "c"});
  t.add_column("x", {1.0, 2.0, 3.0});
  t.add_column("y", {1.0, 3.0, 2.0});
  t.add_column("k", {7.0, 7.0, 7.0});
  const CorrelationMatrix m = pearson_matrix(t, {"x", "y", "k"});
  CHECK(m.r[0][0] == 1.0);
  CHECK(*m.r[0][1] == doctest::Approx(0.5));
  CHECK(m.r[0][1] == m.r[1][0]);
  CHECK_FALSE(m.r[2][2].has_value());
  CHECK_FALSE(m.r[0][2].has_value());
  CHECK(code_of([&] { pearson_matrix(t, {"zz"}); }) == ErrorCode::unknown_metric);
  FeatureTable one({"a"});
  one.add_column("x", {1.0});
  CHECK(code_of([&] { pearson_matrix(one, {"x"}); }) == ErrorCode::invalid_argument);
  CHECK(correlation_to_csv(m).rfind("column,x,y,k\n", 0) == 0);
}

TEST_CASE("property: pearson is affine invariant and symmetric") {
  Rng rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.index(30);
    std::vector<std::optional<double>> a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal();
      b[i] = *a[i] * rng.uniform(-1, 1) + rng.normal();
    }
    const double scale = rng.uniform(0.1, 10), shift = rng.uniform(-100, 100);
    for (std::size_t i = 0; i < n; ++i) c[i] = *a[i] * scale + shift;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
    FeatureTable t(names);
    t.add_column("a", a);
    t.add_column("b", b);
    t.add_column("c", c);
    const auto m = pearson_matrix(t, {"a", "b", "c"});
    CHECK(*m.r[0][1] == doctest::Approx(*m.r[2][1]).epsilon(1e-9));
    CHECK(std::abs(*m.r[0][2] - 1.0) < 1e-9);
    for (int i = 0; i < 3; ++i) {
      CHECK(*m.r[i][i] == 1.0);
      for (int j = 0; j < 3; ++j) CHECK(std::abs(*m.r[i][j] - *m.r[j][i]) <= 1e-12);
    }
    std::vector<double> ra, rb;
    for (std::size_t i = 0; i < n; ++i) ra.push_back(*a[i]), rb.push_back(*b[i]);
    CHECK(std::abs(*m.r[0][1] - oracle::pearson(ra, rb)) < 1e-9);
  }
}

TEST_CASE("chi-square on the 2x2 example") {
  const ChiSquare c = chi_square_test({{10, 20}, {30, 40}});
  CHECK(c.statistic == doctest::Approx(0.7937).epsilon(1e-3));
  CHECK(c.dof == 1);
  CHECK(c.p_value == doctest::Approx(0.373).epsilon(1e-2));
  CHECK(code_of([] { chi_square_test({{1, 2}}); }) == ErrorCode::invalid_argument);
  // a zero-margin column is dropped
  CHECK(chi_square_test({{10, 0, 20}, {30, 0, 40}}).dof == 1);
}

TEST_CASE("chi-square p-values") {
  CHECK(chi_square_p_value(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(chi_square_p_value(0, 3) == 1.0);
  CHECK(chi_square_p_value(5.991464547107979, 2) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("property: chi-square equals the textbook sum") {
  Rng rng(52);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = 2 + rng.index(4), c = 2 + rng.index(4);
    std::vector<std::vector<double>> obs(r, std::vector<double>(c));
    for (auto& row : obs) {
      for (auto& v : row) v = 1 + static_cast<double>(rng.index(50));
    }
    const ChiSquare got = chi_square_test(obs);
    CHECK(std::abs(got.statistic - oracle::chi_square(obs)) <= 1e-9 * std::max(1.0, got.statistic));
    CHECK(got.dof == static_cast<int>((r - 1) * (c - 1)));
    CHECK(got.statistic >= 0);
  }
}

TEST_CASE("quantile bins") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(quantile_bins(v, 2) == std::vector<int>{0, 0, 1, 1});
  CHECK(quantile_bins(std::vector<double>{5, 5, 5}, 4) == std::vector<int>{0, 0, 0});
  const std::vector<double> eight{8, 1, 7, 2, 6, 3, 5, 4};
  CHECK(quantile_bins(eight, 4) == std::vector<int>{3, 0, 3, 0, 2, 1, 2, 1});
}

TEST_CASE("selection keeps dependent predictors and flags degenerate ones") {
  Rng rng(53);
  const std::size_t n = 200;
  std::vector<std::optional<double>> target(n), copy(n), flat(n);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = rng.uniform();
    copy[i] = *target[i] * 3 + 1;
    flat[i] = 2.0;
    names.push_back("c" + std::to_string(i));
  }
  FeatureTable t(names);
  t.add_column("target", target);
  t.add_column("copy", copy);
  t.add_column("flat", flat);
  const FeatureSelection s = chi_square_select(t, "target", {"copy", "flat"});
  CHECK(s.predictors[0].selected);
  CHECK(*s.predictors[0].p_value < 1e-12);
  CHECK_FALSE(s.predictors[1].selected);
  CHECK_FALSE(s.predictors[1].statistic.has_value());
  CHECK(s.selected_names() == std::vector<std::string>{"copy"});
}

TEST_CASE("independent predictors are rarely selected") {
  Rng rng(54);
  int rejected = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 200;
    std::vector<std::optional<double>> y(n), x(n);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform();
      x[i] = rng.uniform();
      names.push_back("c" + std::to_string(i));
    }
    FeatureTable t(names);
    t.add_column("y", y);
    t.add_column("x", x);
    if (!chi_square_select(t, "y", {"x"}).predictors[0].selected) ++rejected;
  }
  CHECK(rejected >= 90);
}

TEST_CASE("property: selected iff p below alpha") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 40 + rng.index(100);
    std::vector<std::optional<double>> y(n), x(n);
    std::vector<std::string> names;
    const double mix = rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.normal();
      x[i] = mix * *y[i] + rng.normal();
      names.push_back("c" + std::to_string(i));
    }
    FeatureTable t(names);
    t.add_column("y", y);
    t.add_column("x", x);
    const double alpha = rng.uniform(0.01, 0.2);
    const auto s = chi_square_select(t, "y", {"x"}, alpha, 2 + static_cast<int>(rng.index(4)));
    CHECK(s.predictors[0].selected == (*s.predictors[0].p_value < alpha));
    CHECK(*s.predictors[0].statistic >= 0);
  }
}

TEST_CASE("train/test split") {
  const Split s = train_test_split(10, 0.2, 1);
  CHECK(s.train.size() == 8);
  CHECK(s.test.size() == 2);
  const Split again = train_test_split(10, 0.2, 1);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  const Split odd = train_test_split(3, 0.5, 1);
  CHECK(odd.train.size() == 1);
  CHECK(odd.test.size() == 2);
  CHECK(code_of([] { train_test_split(1, 0.2, 0); }) == ErrorCode::split);
  CHECK(code_of([] { train_test_split(10, 0.0, 0); }) == ErrorCode::split);
  CHECK(code_of([] { train_test_split(10, 1.0, 0); }) == ErrorCode::split);
}

TEST_CASE("property: split partitions the rows") {
  Rng rng(56);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.index(100);
    const double f = rng.uniform(0.01, 0.99);
    const Split s = train_test_split(n, f, rng.next());
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == n);
    CHECK(s.train.size() + s.test.size() == n);
    CHECK(*all.rbegin() == n - 1);
    CHECK(s.test.size() == static_cast<std::size_t>(std::ceil(static_cast<double>(n) * f)));
  }
}

TEST_CASE("evaluate") {
  const std::vector<double> y{1, 2, 3};
  CHECK(evaluate(y, y).mse == 0.0);
  CHECK(evaluate(y, y).r2 == 1.0);
  CHECK(evaluate(y, std::vector<double>{2, 2, 2}).r2 == doctest::Approx(0.0));
  const Evaluation e = evaluate(y, std::vector<double>{1, 2, 5});
  CHECK(e.mse == doctest::Approx(4.0 / 3.0));
  CHECK(e.r2 == doctest::Approx(-1.0));
  const Evaluation flat = evaluate(std::vector<double>{4, 4}, std::vector<double>{4, 4});
  CHECK(flat.r2 == 0.0);
  CHECK(flat.zero_variance);
  CHECK(code_of([&] { evaluate(y, std::vector<double>{1}); }) == ErrorCode::evaluation);
  CHECK(code_of([&] { evaluate(std::vector<double>{}, std::vector<double>{}); }) == ErrorCode::evaluation);
}

TEST_CASE("ols examples") {
  Matrix x(3, 1);
  for (int i = 0; i < 3; ++i) x(i, 0) = i;
  const std::vector<double> y{0, 1, 2};
  const OlsModel m = ols_fit(x, y);
  CHECK(m.coefficients[0] == doctest::Approx(1.0));
  CHECK(std::abs(m.intercept) < 1e-12);
  const Evaluation e = evaluate(y, m.predict(x));
  CHECK(e.mse < 1e-20);
  CHECK(e.r2 == doctest::Approx(1.0));

  const std::vector<double> flat{4, 4, 4};
  const OlsModel c = ols_fit(x, flat);
  CHECK(std::abs(c.coefficients[0]) < 1e-12);
  CHECK(c.intercept == doctest::Approx(4.0));
  CHECK(evaluate(flat, c.predict(x)).r2 == 0.0);
  CHECK(code_of([] { ols_fit(Matrix(0, 1), std::vector<double>{}); }) == ErrorCode::fit);
}

TEST_CASE("ols recovers 3 + 2a - b") {
  Rng rng(57);
  const Matrix x = matrix(50, 2, rng);
  std::vector<double> y;
  for (std::size_t r = 0; r < 50; ++r) y.push_back(3 + 2 * x(r, 0) - x(r, 1));
  const OlsModel m = ols_fit(x, y);
  CHECK(std::abs(m.intercept - 3) < 1e-8);
  CHECK(std::abs(m.coefficients[0] - 2) < 1e-8);
  CHECK(std::abs(m.coefficients[1] + 1) < 1e-8);
  CHECK_FALSE(m.rank_deficient);
}

TEST_CASE("rank-deficient designs get the minimum-norm solution") {
  Rng rng(58);
  Matrix x(20, 2);
  std::vector<double> y;
  for (std::size_t r = 0; r < 20; ++r) {
    x(r, 0) = rng.uniform(-1, 1);
    x(r, 1) = x(r, 0);
    y.push_back(1 + 4 * x(r, 0));
  }
  const OlsModel m = ols_fit(x, y);
  CHECK(m.rank_deficient);
  CHECK(m.coefficients[0] == doctest::Approx(2.0));
  CHECK(m.coefficients[1] == doctest::Approx(2.0));
}

TEST_CASE("property: ols residuals are orthogonal to the design") {
  Rng rng(59);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10 + rng.index(50), p = 1 + rng.index(5);
    const Matrix x = matrix(n, p, rng);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.normal() * 10;
    const OlsModel m = ols_fit(x, y);
    const auto pred = m.predict(x);
    double scale = 0, rsum = 0;
    for (std::size_t r = 0; r < n; ++r) scale = std::max(scale, std::abs(y[r])), rsum += y[r] - pred[r];
    CHECK(std::abs(rsum) < 1e-6 * scale * n);
    for (std::size_t c = 0; c < p; ++c) {
      double dot = 0;
      for (std::size_t r = 0; r < n; ++r) dot += x(r, c) * (y[r] - pred[r]);
      CHECK(std::abs(dot) < 1e-6 * scale * n);
    }
  }
}

TEST_CASE("standardized importances") {
  Rng rng(60);
  const Matrix x = matrix(40, 3, rng);
  std::vector<double> y;
  for (std::size_t r = 0; r < 40; ++r) y.push_back(5 * x(r, 0) + x(r, 1));
  const auto imp = standardized_importances(ols_fit(x, y), x);
  CHECK(sum(imp) == doctest::Approx(1.0));
  CHECK(imp[0] > imp[1]);
  CHECK(imp[2] < 1e-9);
}

TEST_CASE("single unbootstrapped tree fits distinct training data exactly") {
  Rng rng(61);
  const Matrix x = matrix(60, 3, rng);
  std::vector<double> y;
  for (std::size_t r = 0; r < 60; ++r) y.push_back(std::sin(x(r, 0)) + x(r, 1) * x(r, 2));
  ForestParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  p.max_features = 3;
  const RandomForest f = rf_fit(x, y, p);
  CHECK(evaluate(y, f.predict(x)).r2 == 1.0);
}

TEST_CASE("forest determinism and parameter errors") {
  Rng rng(62);
  const Matrix x = matrix(80, 4, rng);
  std::vector<double> y;
  for (std::size_t r = 0; r < 80; ++r) y.push_back(x(r, 0) * 2 + rng.normal());
  ForestParams p;
  p.n_trees = 30;
  p.seed = 9;
  const auto a = rf_fit(x, y, p).predict(x);
  const auto b = rf_fit(x, y, p).predict(x);
  CHECK(a == b);
  p.threads = 4;
  CHECK(rf_fit(x, y, p).predict(x) == a);
  ForestParams bad = p;
  bad.max_depth = 0;
  CHECK(code_of([&] { rf_fit(x, y, bad); }) == ErrorCode::parameter);
  bad = p;
  bad.n_trees = 0;
  CHECK(code_of([&] { rf_fit(x, y, bad); }) == ErrorCode::parameter);
  bad = p;
  bad.min_leaf = 0;
  CHECK(code_of([&] { rf_fit(x, y, bad); }) == ErrorCode::parameter);
  CHECK(code_of([&] { rf_fit(Matrix(0, 2), std::vector<double>{}, p); }) == ErrorCode::fit);
}

TEST_CASE("one driving feature takes all the importance") {
  Rng rng(63);
  Matrix x(100, 2);
  std::vector<double> y;
  for (std::size_t r = 0; r < 100; ++r) {
    x(r, 0) = rng.uniform();
    x(r, 1) = 1.0;  // constant, never split on
    y.push_back(x(r, 0) > 0.5 ? 10 : 0);
  }
  ForestParams p;
  p.n_trees = 20;
  const RandomForest f = rf_fit(x, y, p);
  CHECK(f.importances[0] == doctest::Approx(1.0));
  CHECK(f.importances[1] == 0.0);
}

TEST_CASE("constant target gives uniform importances") {
  Matrix x(10, 2);
  for (std::size_t r = 0; r < 10; ++r) x(r, 0) = static_cast<double>(r), x(r, 1) = static_cast<double>(r % 3);
  const RandomForest f = rf_fit(x, std::vector<double>(10, 3.0), ForestParams{});
  CHECK(f.no_splits);
  CHECK(f.importances[0] == 0.5);
  CHECK(f.predict(x.row(0)) == 3.0);
}

TEST_CASE("duplicated features share the importance") {
  Rng rng(64);
  Matrix x(120, 3);
  std::vector<double> y;
  for (std::size_t r = 0; r < 120; ++r) {
    x(r, 0) = rng.uniform();
    x(r, 1) = x(r, 0);
    x(r, 2) = rng.uniform();
    y.push_back(4 * x(r, 0) + 0.1 * rng.normal());
  }
  ForestParams p;
  p.n_trees = 50;
  p.seed = 2;
  const RandomForest f = rf_fit(x, y, p);
  CHECK(sum(f.importances) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.importances[0] > 0.1);
  CHECK(f.importances[1] > 0.1);
  CHECK(f.importances[0] + f.importances[1] > 0.8);
}

TEST_CASE("informative feature beats noise") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    Matrix x(60, 2);
    std::vector<double> y;
    for (std::size_t r = 0; r < 60; ++r) {
      x(r, 0) = rng.uniform();
      x(r, 1) = rng.uniform();
      y.push_back(std::sin(6 * x(r, 0)));
    }
    ForestParams p;
    p.n_trees = 25;
    p.seed = seed;
    const RandomForest f = rf_fit(x, y, p);
    if (f.importances[0] > f.importances[1]) ++wins;
  }
  CHECK(wins >= 95);
}

TEST_CASE("property: forest importances and prediction range") {
  Rng rng(65);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 20 + rng.index(60), p = 1 + rng.index(5);
    const Matrix x = matrix(n, p, rng);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.normal() * 3;
    ForestParams fp;
    fp.n_trees = 10;
    fp.seed = trial;
    if (rng.index(2)) fp.max_depth = 1 + static_cast<int>(rng.index(5));
    fp.min_leaf = 1 + static_cast<int>(rng.index(4));
    const RandomForest f = rf_fit(x, y, fp);
    for (double v : f.importances) CHECK(v >= 0);
    CHECK(std::abs(sum(f.importances) - 1.0) <= 1e-9);
    const double lo = *std::min_element(y.begin(), y.end()), hi = *std::max_element(y.begin(), y.end());
    const Matrix probe = matrix(50, p, rng);
    for (double v : f.predict(probe)) {
      CHECK(v >= lo);
      CHECK(v <= hi);
    }
  }
}

TEST_CASE("analysis report and importance ranking") {
  Rng rng(66);
  const std::size_t n = 60;
  std::vector<std::string> names;
  std::vector<std::optional<double>> a(n), b(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    names.push_back("c" + std::to_string(i));
    a[i] = rng.uniform(0, 10);
    b[i] = rng.uniform(0, 10);
    y[i] = 3 * *a[i] + 0.2 * *b[i] + rng.normal();
  }
  a[3] = std::nullopt;
  FeatureTable t(names);
  t.add_column("a", a);
  t.add_column("b", b);
  t.add_column("y", y);
  AnalysisOptions o;
  o.seed = 4;
  o.forest.n_trees = 20;
  const TargetAnalysis r = analyze_target(t, "y", {"a", "b"}, o);
  CHECK(r.ols.kind == "ols");
  CHECK(r.forest.kind == "random_forest");
  CHECK(r.ols.train_rows + r.ols.test_rows == n - 1);
  CHECK(r.ols.test_rows == 12);
  CHECK(r.ols.test.r2 <= 1.0);
  CHECK(r.ols.test.mse >= 0.0);
  CHECK(std::abs(sum(r.forest.importances) - 1.0) < 1e-9);
  CHECK(std::abs(sum(r.ols.importances) - 1.0) < 1e-9);
  CHECK(ranked_importances(r.forest).front().feature == "a");
  CHECK(ranked_importances(r.ols).front().feature == "a");
  CHECK_FALSE(r.ols.warnings.empty());  // the dropped null row
  const std::string json = report_to_json(r.forest);
  CHECK(json.find("\"seed\": 4") != std::string::npos);
  CHECK(importance_report_json({r}).find("\"ranking\"") != std::string::npos);
}
