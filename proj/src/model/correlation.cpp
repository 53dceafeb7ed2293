#include <algorithm>
#include <cmath>

#include "citysafe/error.hpp"
#include "citysafe/model.hpp"
#include "json.hpp"
#include "text.hpp"

namespace citysafe::model {

std::optional<double> pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::invalid_argument, "pearson: columns differ in length");
  }
  std::size_t n = 0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i] || !y[i]) continue;
    ++n;
    mx += *x[i];
    my += *y[i];
  }
  if (n < 2) return std::nullopt;
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i] || !y[i]) continue;
    const double dx = *x[i] - mx, dy = *y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix pearson_matrix(const FeatureTable& table, const std::vector<std::string>& columns) {
  if (table.row_count() < 2) {
    throw Error(ErrorCode::invalid_argument,
                "correlation needs at least 2 rows; got " + std::to_string(table.row_count()));
  }
  std::vector<const FeatureColumn*> cols;
  for (const auto& name : columns) cols.push_back(&table.column(name));

  CorrelationMatrix m;
  m.names = columns;
  const std::size_t k = cols.size();
  m.r.assign(k, std::vector<std::optional<double>>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      std::optional<double> r = pearson(cols[i]->values, cols[j]->values);
      if (i == j && r) r = 1.0;
      m.r[i][j] = r;
      m.r[j][i] = r;
    }
  }
  return m;
}

namespace {

std::string csv_cell(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string correlation_to_csv(const CorrelationMatrix& m) {
  std::string out = "column";
  for (const auto& n : m.names) out += "," + csv_cell(n);
  out += "\n";
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    out += csv_cell(m.names[i]);
    for (const auto& v : m.r[i]) {
      out += ",";
      if (v) out += format_double(*v);
    }
    out += "\n";
  }
  return out;
}

std::string correlation_to_json(const CorrelationMatrix& m) {
  nlohmann::ordered_json j;
  j["columns"] = m.names;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : m.r) {
    auto cells = nlohmann::ordered_json::array();
    for (const auto& v : row) cells.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr));
    rows.push_back(std::move(cells));
  }
  j["r"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace citysafe::model
