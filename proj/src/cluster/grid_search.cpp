#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

#include "citysafe/cluster.hpp"
#include "citysafe/error.hpp"
#include "json.hpp"

namespace citysafe::cluster {

using nlohmann::json;

namespace {

/// Values of one axis: a scalar, an array, or {"from","to","step"}.
std::vector<json> axis_values(const json& grid, const std::string& name, const json& fallback) {
  if (!grid.contains(name)) return {fallback};
  const json& v = grid.at(name);
  if (v.is_array()) {
    if (v.empty()) throw Error(ErrorCode::configuration, "grid axis '" + name + "' is empty");
    return std::vector<json>(v.begin(), v.end());
  }
  if (v.is_object()) {
    if (!v.contains("from") || !v.contains("to")) {
      throw Error(ErrorCode::configuration, "grid range '" + name + "' needs 'from' and 'to'");
    }
    const double from = v.at("from").get<double>();
    const double to = v.at("to").get<double>();
    const double step = v.value("step", 1.0);
    if (!(step > 0.0) || to < from) {
      throw Error(ErrorCode::configuration, "grid range '" + name + "' is empty or has a non-positive step");
    }
    const bool integral = v.at("from").is_number_integer() && v.at("to").is_number_integer() &&
                          (!v.contains("step") || v.at("step").is_number_integer());
    std::vector<json> out;
    const auto count = static_cast<long>(std::floor((to - from) / step + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) {
      const double x = from + static_cast<double>(i) * step;
      if (integral) {
        out.emplace_back(static_cast<long>(std::llround(x)));
      } else {
        out.emplace_back(x);
      }
    }
    return out;
  }
  return {v};
}

template <typename T>
T get_as(const json& v, const std::string& name) {
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() && !(v.is_number_float() && std::floor(v.get<double>()) == v.get<double>())) {
        throw Error(ErrorCode::configuration, "grid value for '" + name + "' must be an integer");
      }
      return static_cast<T>(v.get<double>());
    } else {
      return v.get<T>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::configuration, "grid value for '" + name + "': " + e.what());
  }
}

Linkage parse_linkage(const json& v) {
  const std::string s = v.is_string() ? v.get<std::string>() : std::string();
  if (s == "ward") return Linkage::ward;
  if (s == "complete") return Linkage::complete;
  if (s == "average") return Linkage::average;
  throw Error(ErrorCode::configuration, "unknown linkage '" + v.dump() + "'");
}

/// Visits the Cartesian product of `axes` (first axis outermost).
void product(const std::vector<std::vector<json>>& axes,
             const std::function<void(const std::vector<json>&)>& emit) {
  std::vector<std::size_t> at(axes.size(), 0);
  std::vector<json> current(axes.size());
  for (;;) {
    for (std::size_t a = 0; a < axes.size(); ++a) current[a] = axes[a][at[a]];
    emit(current);
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++at[a] < axes[a].size()) break;
      at[a] = 0;
      if (a == 0) return;
    }
    if (axes.empty()) return;
  }
}

void reject_unknown(const json& grid, std::initializer_list<std::string_view> known, std::string_view algo) {
  for (const auto& [key, value] : grid.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::configuration,
                  "unknown grid axis '" + key + "' for algorithm '" + std::string(algo) + "'");
    }
  }
}

}  // namespace

std::vector<ClusterParams> expand_grid(std::string_view algorithm, std::string_view grid_json) {
  json grid;
  try {
    grid = grid_json.empty() ? json::object() : json::parse(grid_json);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::configuration, std::string("grid is not valid JSON: ") + e.what());
  }
  if (!grid.is_object()) throw Error(ErrorCode::configuration, "grid must be a JSON object");

  std::vector<ClusterParams> out;
  if (algorithm == "kmeans") {
    reject_unknown(grid, {"k", "max_iter", "n_init"}, algorithm);
    product({axis_values(grid, "k", 8), axis_values(grid, "max_iter", 100), axis_values(grid, "n_init", 1)},
            [&](const std::vector<json>& v) {
              out.push_back(
                  KMeansParams{get_as<int>(v[0], "k"), get_as<int>(v[1], "max_iter"), 0, get_as<int>(v[2], "n_init")});
            });
  } else if (algorithm == "clarans") {
    reject_unknown(grid, {"k", "numlocal", "maxneighbor"}, algorithm);
    product({axis_values(grid, "k", 2), axis_values(grid, "numlocal", 2), axis_values(grid, "maxneighbor", 100)},
            [&](const std::vector<json>& v) {
              out.push_back(ClaransParams{get_as<int>(v[0], "k"), get_as<int>(v[1], "numlocal"),
                                          get_as<int>(v[2], "maxneighbor"), 0});
            });
  } else if (algorithm == "dbscan") {
    reject_unknown(grid, {"eps", "min_pts"}, algorithm);
    product({axis_values(grid, "eps", 0.5), axis_values(grid, "min_pts", 5)}, [&](const std::vector<json>& v) {
      out.push_back(DbscanParams{get_as<double>(v[0], "eps"), get_as<int>(v[1], "min_pts")});
    });
  } else if (algorithm == "optics") {
    reject_unknown(grid, {"eps", "min_pts", "extraction_eps"}, algorithm);
    const bool explicit_extraction = grid.contains("extraction_eps");
    product({axis_values(grid, "eps", 0.5), axis_values(grid, "min_pts", 5),
             axis_values(grid, "extraction_eps", nullptr)},
            [&](const std::vector<json>& v) {
              const double eps = get_as<double>(v[0], "eps");
              out.push_back(OpticsParams{eps, get_as<int>(v[1], "min_pts"),
                                         explicit_extraction ? get_as<double>(v[2], "extraction_eps") : eps});
            });
  } else if (algorithm == "agglo" || algorithm == "agglomerative") {
    reject_unknown(grid, {"n_clusters", "linkage"}, algorithm);
    product({axis_values(grid, "n_clusters", 2), axis_values(grid, "linkage", "ward")},
            [&](const std::vector<json>& v) {
              out.push_back(AgglomerativeParams{get_as<int>(v[0], "n_clusters"), parse_linkage(v[1])});
            });
  } else if (algorithm == "clique") {
    reject_unknown(grid, {"intervals", "threshold"}, algorithm);
    product({axis_values(grid, "intervals", 10), axis_values(grid, "threshold", 0)},
            [&](const std::vector<json>& v) {
              out.push_back(CliqueParams{get_as<int>(v[0], "intervals"), get_as<int>(v[1], "threshold")});
            });
  } else {
    throw Error(ErrorCode::configuration, "unknown clustering algorithm '" + std::string(algorithm) + "'");
  }
  return out;
}

namespace {

ClusterParams with_job_seed(ClusterParams p, std::uint64_t seed, std::size_t index) {
  const std::uint64_t job_seed = seed ^ static_cast<std::uint64_t>(index);
  if (auto* k = std::get_if<KMeansParams>(&p)) k->seed = job_seed;
  if (auto* c = std::get_if<ClaransParams>(&p)) c->seed = job_seed;
  return p;
}

}  // namespace

GridResult grid_search(const PointSet& ps, const std::vector<ClusterParams>& grid, std::uint64_t seed,
                       Metric metric, unsigned threads) {
  if (grid.empty()) throw Error(ErrorCode::invalid_argument, "grid search over an empty grid");

  std::vector<GridRow> rows(grid.size());
  std::vector<Clustering> results(grid.size());
  std::vector<std::exception_ptr> failures(grid.size());

  auto job = [&](std::size_t i) {
    GridRow& row = rows[i];
    row.params = with_job_seed(grid[i], seed, i);
    try {
      Clustering c = run(ps, row.params, metric);
      row.n_clusters = c.n_clusters;
      row.noise = c.noise_count();
      try {
        c.silhouette = silhouette(ps, c.labels, metric);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::undefined_score) throw;
        row.note = e.what();
      }
      row.silhouette = c.silhouette;
      results[i] = std::move(c);
    } catch (const Error& e) {
      // Parameters that do not fit the data (k > n, ...) leave the score undefined.
      if (e.code() != ErrorCode::parameter) {
        failures[i] = std::current_exception();
        return;
      }
      row.note = e.what();
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, grid.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) job(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) job(i);
      });
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  GridResult out;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].silhouette) continue;
    if (!best || *rows[i].silhouette > *rows[*best].silhouette) best = i;
  }
  if (!best) {
    throw Error(ErrorCode::no_valid_clustering,
                "no grid point produced a defined silhouette (" + std::to_string(grid.size()) + " evaluated)");
  }
  out.best_index = *best;
  out.best = std::move(results[*best]);
  out.table = std::move(rows);
  return out;
}

}  // namespace citysafe::cluster
