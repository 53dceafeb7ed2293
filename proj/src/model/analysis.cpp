#include <algorithm>

#include "citysafe/error.hpp"
#include "citysafe/model.hpp"
#include "json.hpp"

namespace citysafe::model {

using nlohmann::ordered_json;

namespace {

ordered_json evaluation_json(const Evaluation& e) {
  ordered_json j;
  j["mse"] = e.mse;
  j["r2"] = e.r2;
  return j;
}

void note_zero_variance(ModelReport& r, const Evaluation& e, const char* which) {
  if (e.zero_variance) r.warnings.push_back(std::string(which) + " target has zero variance; R2 reported as 0");
}

}  // namespace

std::string report_to_json(const ModelReport& r) {
  ordered_json j;
  j["kind"] = r.kind;
  j["target"] = r.target;
  j["features"] = r.features;
  if (r.intercept) j["intercept"] = *r.intercept;
  if (!r.coefficients.empty() || r.kind == "ols") j["coefficients"] = r.coefficients;
  j["importances"] = r.importances;
  j["importance_kind"] = r.importance_kind;
  j["train"] = evaluation_json(r.train);
  j["test"] = evaluation_json(r.test);
  j["train_rows"] = r.train_rows;
  j["test_rows"] = r.test_rows;
  j["seed"] = r.seed;
  j["hyperparameters"] = ordered_json::parse(r.hyperparameters_json);
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

TargetAnalysis analyze_target(const FeatureTable& table, std::string_view target,
                              const std::vector<std::string>& candidates, const AnalysisOptions& options) {
  const FeatureColumn& y_col = table.column(target);
  std::vector<std::string> pool = candidates;
  if (pool.empty()) {
    for (const auto& c : table.columns()) {
      if (c.name != target) pool.push_back(c.name);
    }
  }
  if (std::find(pool.begin(), pool.end(), std::string(target)) != pool.end()) {
    throw Error(ErrorCode::invalid_argument, "target '" + std::string(target) + "' is also listed as a predictor");
  }
  if (pool.empty()) throw Error(ErrorCode::fit, "no predictors for target '" + std::string(target) + "'");

  TargetAnalysis out;
  out.selection = chi_square_select(table, target, pool, options.alpha, options.bins);
  std::vector<std::string> features = out.selection.selected_names();
  std::vector<std::string> shared_warnings;
  if (features.empty()) {
    features = pool;
    shared_warnings.push_back("no predictor passed the chi-square test; all candidates used");
  }

  std::vector<const FeatureColumn*> cols;
  for (const auto& f : features) cols.push_back(&table.column(f));
  std::vector<std::size_t> complete;
  for (std::size_t i = 0; i < table.row_count(); ++i) {
    bool ok = y_col.values[i].has_value();
    for (const auto* c : cols) ok = ok && c->values[i].has_value();
    if (ok) complete.push_back(i);
  }
  if (complete.size() < table.row_count()) {
    shared_warnings.push_back(std::to_string(table.row_count() - complete.size()) +
                              " rows with null values dropped");
  }
  Matrix x(complete.size(), cols.size());
  std::vector<double> y(complete.size());
  for (std::size_t r = 0; r < complete.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) x(r, c) = *cols[c]->values[complete[r]];
    y[r] = *y_col.values[complete[r]];
  }

  const Split split = train_test_split(complete.size(), options.test_fraction, options.seed);
  const Matrix x_train = x.select_rows(split.train), x_test = x.select_rows(split.test);
  std::vector<double> y_train, y_test;
  for (std::size_t i : split.train) y_train.push_back(y[i]);
  for (std::size_t i : split.test) y_test.push_back(y[i]);

  auto base = [&](const char* kind) {
    ModelReport r;
    r.kind = kind;
    r.target = std::string(target);
    r.features = features;
    r.train_rows = split.train.size();
    r.test_rows = split.test.size();
    r.seed = options.seed;
    r.warnings = shared_warnings;
    return r;
  };

  {
    ModelReport& r = out.ols = base("ols");
    const OlsModel m = ols_fit(x_train, y_train);
    r.intercept = m.intercept;
    r.coefficients = m.coefficients;
    r.importances = standardized_importances(m, x_train);
    r.importance_kind = "normalized_abs_standardized_coefficient";
    r.train = evaluate(y_train, m.predict(x_train));
    r.test = evaluate(y_test, m.predict(x_test));
    ordered_json h;
    h["intercept"] = true;
    h["solver"] = "complete_orthogonal_decomposition";
    h["rank"] = m.rank;
    r.hyperparameters_json = h.dump();
    if (m.rank_deficient) r.warnings.push_back("design matrix is rank deficient; minimum-norm solution reported");
    note_zero_variance(r, r.train, "train");
    note_zero_variance(r, r.test, "test");
  }
  {
    ModelReport& r = out.forest = base("random_forest");
    ForestParams fp = options.forest;
    fp.seed = options.seed;
    const RandomForest f = rf_fit(x_train, y_train, fp);
    r.importances = f.importances;
    r.importance_kind = "normalized_variance_reduction";
    r.train = evaluate(y_train, f.predict(x_train));
    r.test = evaluate(y_test, f.predict(x_test));
    ordered_json h;
    h["n_trees"] = fp.n_trees;
    h["max_depth"] = fp.max_depth ? ordered_json(*fp.max_depth) : ordered_json(nullptr);
    h["min_leaf"] = fp.min_leaf;
    h["max_features"] = fp.max_features ? *fp.max_features : std::max<int>(1, (static_cast<int>(features.size()) + 2) / 3);
    h["bootstrap"] = fp.bootstrap;
    r.hyperparameters_json = h.dump();
    if (f.no_splits) r.warnings.push_back("no tree found a split; importances are uniform");
    note_zero_variance(r, r.train, "train");
    note_zero_variance(r, r.test, "test");
  }
  return out;
}

std::vector<ImportanceRow> ranked_importances(const ModelReport& r) {
  if (r.features.size() != r.importances.size()) {
    throw Error(ErrorCode::invalid_argument, "report has mismatched features and importances");
  }
  std::vector<ImportanceRow> rows;
  for (std::size_t i = 0; i < r.features.size(); ++i) rows.push_back({r.features[i], r.importances[i]});
  std::stable_sort(rows.begin(), rows.end(), [](const ImportanceRow& a, const ImportanceRow& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.feature < b.feature;
  });
  return rows;
}

std::string importance_report_json(const std::vector<TargetAnalysis>& analyses) {
  ordered_json out = ordered_json::array();
  for (const auto& a : analyses) {
    for (const ModelReport* r : {&a.ols, &a.forest}) {
      ordered_json entry;
      entry["target"] = r->target;
      entry["model"] = r->kind;
      entry["importance_kind"] = r->importance_kind;
      auto rows = ordered_json::array();
      for (const auto& row : ranked_importances(*r)) {
        ordered_json e;
        e["feature"] = row.feature;
        e["importance"] = row.importance;
        rows.push_back(std::move(e));
      }
      entry["ranking"] = std::move(rows);
      out.push_back(std::move(entry));
    }
  }
  return out.dump(2) + "\n";
}

}  // namespace citysafe::model
