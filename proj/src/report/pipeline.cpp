#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "citysafe/error.hpp"
#include "citysafe/ingest.hpp"
#include "citysafe/model.hpp"
#include "citysafe/report.hpp"
#include "report/config_json.hpp"

#ifndef CITYSAFE_VERSION
#define CITYSAFE_VERSION "0.0.0"
#endif

namespace citysafe::report {

namespace fs = std::filesystem;
using config::Json;

const char* version() { return CITYSAFE_VERSION; }

namespace {

[[noreturn]] void bad_config(const std::string& msg) { throw Error(ErrorCode::configuration, msg); }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// File-name-safe form of a column name ("crime:Break & Enter" -> "crime_Break_Enter").
std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.';
    if (keep) {
      out += c;
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "metric" : out;
}

std::string json_string_or(const Json& j, const char* key, std::string fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_string()) bad_config(std::string("'") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

std::vector<std::string> string_list(const Json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  if (!j.at(key).is_array()) bad_config(std::string("'") + key + "' must be an array of strings");
  for (const auto& v : j.at(key)) {
    if (!v.is_string()) bad_config(std::string("'") + key + "' must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

struct DatasetSpec {
  std::string role;
  fs::path path;
  Schema schema;
  CleaningPolicy policy;
  std::optional<std::pair<std::string, std::string>> categorize;  // description -> category
  std::optional<GeocodeColumns> geocode;
  std::string date_column;
  std::string category_column;
  std::string count_column;
};

struct ClusterRun {
  std::string name;
  std::string algorithm;
  std::vector<cluster::ClusterParams> grid;
};

struct Plan {
  std::uint64_t seed = 0;
  fs::path boundaries;
  std::string name_property = "name";
  std::string sector_property = "sector";
  std::vector<DatasetSpec> datasets;
  CategoryRules rules;
  FeatureConfig features;
  model::AnalysisOptions model;
  std::vector<std::string> targets;
  std::vector<std::string> predictors;
  bool has_cluster = false;
  std::string cluster_dataset;
  std::string cluster_id_column;
  std::size_t sample_size = 3000;
  cluster::Metric metric = cluster::Metric::euclidean;
  bool force = false;
  std::vector<ClusterRun> runs;
  std::vector<std::string> choropleth_metrics;
  int choropleth_bins = 5;
  std::size_t top_k = 10;
  std::vector<std::string> top_metrics;
};

Plan make_plan(const Json& cfg, const fs::path& base, std::optional<std::uint64_t> seed_override) {
  if (!cfg.is_object()) bad_config("config must be a JSON object");
  Plan p;
  try {
    p.seed = seed_override ? *seed_override : cfg.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception&) {
    bad_config("'seed' must be an unsigned integer");
  }

  if (!cfg.contains("boundaries")) bad_config("config needs 'boundaries'");
  const Json& b = cfg.at("boundaries");
  if (b.is_string()) {
    p.boundaries = base / b.get<std::string>();
  } else if (b.is_object()) {
    p.boundaries = base / json_string_or(b, "path", "");
    p.name_property = json_string_or(b, "name_property", p.name_property);
    p.sector_property = json_string_or(b, "sector_property", p.sector_property);
  } else {
    bad_config("'boundaries' must be a path or an object");
  }

  if (!cfg.contains("datasets") || !cfg.at("datasets").is_object() || cfg.at("datasets").empty()) {
    bad_config("config needs a non-empty 'datasets' object");
  }
  for (const auto& [role, d] : cfg.at("datasets").items()) {
    if (!d.is_object()) bad_config("dataset '" + role + "' must be an object");
    DatasetSpec s;
    s.role = role;
    const std::string path = json_string_or(d, "path", "");
    if (path.empty()) bad_config("dataset '" + role + "' needs a 'path'");
    s.path = base / path;
    if (!d.contains("schema")) bad_config("dataset '" + role + "' needs a 'schema'");
    try {
      s.schema = config::schema_from(d.at("schema"));
      s.policy = config::policy_from(d.contains("policy") ? d.at("policy") : Json());
    } catch (const Error& e) {
      bad_config("dataset '" + role + "': " + e.what());
    }
    if (d.contains("categorize")) {
      const Json& c = d.at("categorize");
      s.categorize = {json_string_or(c, "description", "description"), json_string_or(c, "category", "category")};
    }
    if (!d.contains("geocode") || !d.at("geocode").is_boolean() || d.at("geocode").get<bool>()) {
      GeocodeColumns g;
      if (d.contains("geocode") && d.at("geocode").is_object()) {
        const Json& gj = d.at("geocode");
        g.latitude = json_string_or(gj, "latitude", g.latitude);
        g.longitude = json_string_or(gj, "longitude", g.longitude);
        g.community = json_string_or(gj, "community", g.community);
        g.point = json_string_or(gj, "point", g.point);
      }
      s.geocode = g;
    }
    s.date_column = json_string_or(d, "date_column", "");
    s.category_column = json_string_or(d, "category_column", "");
    s.count_column = json_string_or(d, "count_column", "");
    p.datasets.push_back(std::move(s));
  }

  p.rules = config::category_rules_from(cfg.contains("category_rules") ? cfg.at("category_rules") : Json());
  p.features = config::feature_config_from(cfg.contains("features") ? cfg.at("features") : Json());
  const Json model = cfg.contains("model") ? cfg.at("model") : Json::object();
  p.model = config::analysis_options_from(model);
  p.model.seed = p.seed;
  p.targets = string_list(model, "targets");
  if (p.targets.empty()) p.targets = {"crime_total", "disorder_count", "traffic_incident_count"};
  p.predictors = string_list(model, "predictors");

  if (cfg.contains("cluster")) {
    const Json& c = cfg.at("cluster");
    if (!c.is_object()) bad_config("'cluster' must be an object");
    p.has_cluster = true;
    p.cluster_dataset = json_string_or(c, "dataset", "traffic_incidents");
    p.cluster_id_column = json_string_or(c, "id_column", "");
    p.sample_size = c.value("sample_size", p.sample_size);
    p.force = c.value("force", false);
    const std::string metric = json_string_or(c, "metric", "euclidean");
    if (metric == "haversine") {
      p.metric = cluster::Metric::haversine;
    } else if (metric != "euclidean") {
      bad_config("unknown cluster metric '" + metric + "'");
    }
    if (!c.contains("runs") || !c.at("runs").is_array()) bad_config("'cluster.runs' must be an array");
    std::map<std::string, int> seen;
    for (const auto& r : c.at("runs")) {
      ClusterRun run;
      run.algorithm = json_string_or(r, "algo", "");
      if (run.algorithm.empty()) bad_config("every cluster run needs 'algo'");
      run.grid = cluster::expand_grid(run.algorithm, r.contains("grid") ? r.at("grid").dump() : "{}");
      run.name = json_string_or(r, "name", run.algorithm);
      if (seen[run.name]++ > 0) run.name += "_" + std::to_string(seen[run.name] - 1);
      p.runs.push_back(std::move(run));
    }
  }

  const Json chor = cfg.contains("choropleth") ? cfg.at("choropleth") : Json::object();
  p.choropleth_metrics = string_list(chor, "metrics");
  p.choropleth_bins = chor.value("bins", 5);
  if (p.choropleth_bins < 2) bad_config("'choropleth.bins' must be >= 2");

  const Json top = cfg.contains("top") ? cfg.at("top") : Json::object();
  p.top_k = top.value("k", std::size_t{10});
  if (p.top_k < 1) bad_config("'top.k' must be >= 1");
  p.top_metrics = string_list(top, "metrics");
  return p;
}

class Run {
 public:
  Run(const fs::path& out, RunManifest& m) : out_(out), manifest_(m) {}

  void write(const std::string& rel, const std::string& content) {
    const fs::path target = out_ / rel;
    fs::create_directories(target.parent_path());
    std::ofstream f(target, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::io, "cannot write '" + target.string() + "'");
    f << content;
    if (!f) throw Error(ErrorCode::io, "failed writing '" + target.string() + "'");
    manifest_.artifacts.push_back({rel, sha256_hex(content), content.size()});
  }

  std::string input(const fs::path& p) {
    std::string bytes = read_file(p);
    manifest_.inputs.push_back({p.string(), sha256_hex(bytes), bytes.size()});
    return bytes;
  }

  template <typename Fn>
  void stage(const std::string& name, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      fail(name, e.code(), e.what());
    } catch (const std::exception& e) {
      fail(name, ErrorCode::internal, e.what());
    }
    manifest_.stages_completed.push_back(name);
  }

  void finish() {
    manifest_.finished_at = utc_now();
    write_manifest();
  }

 private:
  [[noreturn]] void fail(const std::string& stage, ErrorCode code, const std::string& what) {
    manifest_.status = "failed";
    manifest_.failed_stage = stage;
    manifest_.error = what;
    manifest_.finished_at = utc_now();
    try {
      write_manifest();
    } catch (const std::exception&) {
      // The stage error is the one worth reporting.
    }
    throw StageError(stage, code, what);
  }

  void write_manifest() {
    fs::create_directories(out_);
    std::ofstream f(out_ / "manifest.json", std::ios::binary | std::ios::trunc);
    f << manifest_.to_json();
    if (!f) throw Error(ErrorCode::io, "cannot write manifest");
  }

  fs::path out_;
  RunManifest& manifest_;
};

std::vector<std::string> present(const FeatureTable& t, const std::vector<std::string>& wanted) {
  std::vector<std::string> out;
  for (const auto& w : wanted) {
    if (t.find(w)) out.push_back(w);
  }
  return out;
}

}  // namespace

std::string RunManifest::to_json() const {
  Json j;
  j["tool"] = "citysafe";
  j["version"] = version;
  j["status"] = status;
  if (!failed_stage.empty()) {
    j["failed_stage"] = failed_stage;
    j["error"] = error;
  }
  j["seed"] = seed;
  j["config"] = {{"path", config_path}, {"sha256", config_sha256}};
  auto digests = [](const std::vector<FileDigest>& files) {
    auto out = Json::array();
    for (const auto& f : files) out.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    return out;
  };
  j["inputs"] = digests(inputs);
  j["artifacts"] = digests(artifacts);
  j["stages_completed"] = stages_completed;
  j["warnings"] = warnings;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  return j.dump(2) + "\n";
}

RunManifest run_pipeline(const std::string& config_path, const std::string& out_dir,
                         std::optional<std::uint64_t> seed_override) {
  RunManifest manifest;
  manifest.version = version();
  manifest.status = "ok";
  manifest.started_at = utc_now();
  manifest.config_path = config_path;

  std::string config_text;
  try {
    config_text = read_file(config_path);
  } catch (const Error& e) {
    bad_config(e.what());
  }
  manifest.config_sha256 = sha256_hex(config_text);
  const Json cfg = config::parse_json(config_text, "config");
  const Plan plan = make_plan(cfg, fs::path(config_path).parent_path(), seed_override);
  manifest.seed = plan.seed;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) bad_config("cannot create output directory '" + out_dir + "': " + ec.message());
  Run run(out_dir, manifest);

  std::map<std::string, Dataset> tables;
  BoundarySet boundaries;
  FeatureTable features;
  std::vector<model::TargetAnalysis> analyses;

  run.stage("ingest", [&] {
    for (const auto& spec : plan.datasets) {
      const std::string bytes = run.input(spec.path);
      Dataset d = apply_policy(parse_table(bytes, spec.schema, spec.role), spec.policy);
      if (spec.categorize) d = categorize(d, spec.categorize->first, spec.categorize->second, plan.rules);
      tables.emplace(spec.role, std::move(d));
    }
  });

  run.stage("geocode", [&] {
    boundaries = load_boundaries(run.input(plan.boundaries), plan.name_property, plan.sector_property);
    for (const auto& w : boundaries.warnings()) manifest.warnings.push_back(w);
    Json report = Json::object();
    for (const auto& spec : plan.datasets) {
      Dataset& d = tables.at(spec.role);
      if (spec.geocode) {
        GeocodeReport r;
        d = geocode_dataset(d, boundaries, *spec.geocode, &r);
        report[spec.role] = {{"passthrough", r.passthrough},
                             {"centroid", r.by_centroid},
                             {"polygon", r.by_polygon},
                             {"unresolved", r.unresolved}};
      }
      run.write("clean/" + spec.role + ".csv", serialize_table(d));
    }
    run.write("geocode_report.json", report.dump(2) + "\n");
  });

  run.stage("features", [&] {
    FeatureSources src;
    const std::map<std::string, const Dataset**> slots = {
        {"streetlights", &src.streetlights}, {"trees", &src.trees}, {"traffic_incidents", &src.traffic_incidents},
        {"crime", &src.crime},               {"disorder", &src.disorder}, {"pets", &src.pets},
        {"census", &src.census}};
    for (const auto& [role, slot] : slots) {
      if (auto it = tables.find(role); it != tables.end()) *slot = &it->second;
    }
    std::vector<std::string> warnings;
    features = aggregate_by_community(src, boundaries, plan.features, &warnings);
    for (auto& w : warnings) manifest.warnings.push_back(std::move(w));
    run.write("features/community_features.csv", feature_table_to_csv(features));
    run.write("features/community_features.json", feature_table_to_json(features));

    std::vector<std::string> metrics = plan.top_metrics;
    if (metrics.empty()) metrics = present(features, {"crime_total", "disorder_count", "traffic_incident_count"});
    for (const auto& m : metrics) {
      run.write("features/top" + std::to_string(plan.top_k) + "_" + slug(m) + ".csv",
                ranked_to_csv(top_k(features, m, plan.top_k), m));
    }

    for (const auto& spec : plan.datasets) {
      if (spec.date_column.empty()) continue;
      const Dataset& d = tables.at(spec.role);
      std::optional<std::string_view> cat, count;
      if (!spec.category_column.empty()) cat = spec.category_column;
      if (!spec.count_column.empty()) count = spec.count_column;
      const TimeSeries monthly = monthly_series(d, spec.date_column, cat, count);
      if (monthly.skipped_rows > 0) {
        manifest.warnings.push_back(spec.role + ": " + std::to_string(monthly.skipped_rows) +
                                    " rows without a usable date left out of the trends");
      }
      run.write("trends/" + spec.role + "_monthly.csv", series_to_csv(monthly));
      if (!monthly.points.empty()) {
        run.write("trends/" + spec.role + "_monthly_average.csv", monthly_averages_to_csv(monthly_averages(monthly)));
      }
      if (cat) run.write("trends/" + spec.role + "_yearly.csv", series_to_csv(yearly_by_category(d, spec.date_column, *cat, count)));
    }
  });

  run.stage("model", [&] {
    const std::vector<std::string> names = features.column_names();
    const auto corr = model::pearson_matrix(features, names);
    run.write("model/correlation.csv", model::correlation_to_csv(corr));
    run.write("model/correlation.json", model::correlation_to_json(corr));

    const std::vector<std::string> targets = present(features, plan.targets);
    for (const auto& target : targets) {
      std::vector<std::string> candidates = plan.predictors;
      if (candidates.empty()) {
        for (const auto& n : names) {
          const bool is_target = std::find(targets.begin(), targets.end(), n) != targets.end();
          if (!is_target && n.rfind("crime:", 0) != 0) candidates.push_back(n);
        }
      }
      model::TargetAnalysis a = model::analyze_target(features, target, candidates, plan.model);
      const std::string stem = "model/" + slug(target);
      run.write(stem + "_selection.json", model::selection_to_json(a.selection));
      run.write(stem + "_ols.json", model::report_to_json(a.ols));
      run.write(stem + "_random_forest.json", model::report_to_json(a.forest));
      analyses.push_back(std::move(a));
    }
    run.write("model/importance.json", model::importance_report_json(analyses));
  });

  run.stage("cluster", [&] {
    if (!plan.has_cluster) return;
    const auto it = tables.find(plan.cluster_dataset);
    if (it == tables.end()) {
      throw Error(ErrorCode::configuration, "cluster dataset '" + plan.cluster_dataset + "' is not configured");
    }
    const Dataset& d = it->second;
    const auto spec = std::find_if(plan.datasets.begin(), plan.datasets.end(),
                                   [&](const DatasetSpec& s) { return s.role == plan.cluster_dataset; });
    const GeocodeColumns cols = spec->geocode.value_or(GeocodeColumns{});
    if (!plan.force) require_point_locations(d, cols.source);
    cluster::PointSet ps = points_from_dataset(d, cols.latitude, cols.longitude, plan.cluster_id_column);
    if (ps.size() > plan.sample_size) ps = ps.sample(plan.sample_size, plan.seed);

    Json summary = Json::array();
    for (const auto& r : plan.runs) {
      const cluster::GridResult g = cluster::grid_search(ps, r.grid, plan.seed, plan.metric);
      run.write("cluster/" + slug(r.name) + "_grid.csv", grid_table_to_csv(g));
      run.write("cluster/" + slug(r.name) + "_labels.csv", labels_to_csv(ps, g.best.labels));
      run.write("cluster/" + slug(r.name) + "_best.geojson", export_cluster_map(ps, g.best.labels));
      summary.push_back({{"name", r.name},
                         {"algorithm", cluster::algorithm_name(g.best.params)},
                         {"params", Json::parse(cluster::params_to_json(g.best.params))},
                         {"silhouette", *g.best.silhouette},
                         {"n_clusters", g.best.n_clusters},
                         {"noise", g.best.noise_count()},
                         {"points", ps.size()}});
    }
    run.write("cluster/summary.json", summary.dump(2) + "\n");
  });

  run.stage("export", [&] {
    std::vector<std::string> metrics = plan.choropleth_metrics;
    if (metrics.empty()) metrics = present(features, {"crime_total", "disorder_count", "traffic_incident_count"});
    for (const auto& m : metrics) {
      run.write("maps/choropleth_" + slug(m) + ".geojson", export_choropleth(features, m, boundaries, plan.choropleth_bins));
    }
    Json w = manifest.warnings;
    run.write("warnings.json", w.dump(2) + "\n");
  });

  run.finish();
  return manifest;
}

}  // namespace citysafe::report
