// Command-line front end. Talks to the library only through citysafe.h.

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "citysafe/citysafe.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

/// Carries a library status out of a subcommand.
struct Failure {
  cs_status status;
  std::string message;
};

void check(cs_status s) {
  if (s != CS_OK) throw Failure{s, cs_last_error()};
}

[[noreturn]] void usage_error(const std::string& msg) { throw Failure{CS_ERR_CONFIGURATION, msg}; }

int exit_code(cs_status s) {
  switch (s) {
    case CS_ERR_CONFIGURATION:
    case CS_ERR_INVALID_ARGUMENT:
    case CS_ERR_PARAMETER:
    case CS_ERR_UNKNOWN_METRIC:
    case CS_ERR_REFUSED:
      return kExitConfig;
    default:
      return kExitStage;
  }
}

struct StringDeleter {
  void operator()(char* s) const { cs_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

std::string take(char* s) {
  OwnedString owned(s);
  return s ? std::string(s) : std::string();
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<cs_dataset, Deleter<cs_dataset, cs_dataset_free>>;
using Boundaries = std::unique_ptr<cs_boundaries, Deleter<cs_boundaries, cs_boundaries_free>>;
using Features = std::unique_ptr<cs_features, Deleter<cs_features, cs_features_free>>;
using ClusterResult = std::unique_ptr<cs_cluster_result, Deleter<cs_cluster_result, cs_cluster_result_free>>;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{CS_ERR_IO, "cannot read '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{CS_ERR_IO, "cannot write '" + path.string() + "'"};
  out << content;
}

/// Inline JSON when it starts with '{' or '[', otherwise a file path.
std::string json_arg(const std::string& v) {
  const auto first = v.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (v[first] == '{' || v[first] == '[')) return v;
  return read_text(v);
}

std::string schema_path_for(const std::string& csv) { return csv + ".schema.json"; }

Dataset load_dataset(const std::string& path, const std::string& schema_arg) {
  std::string schema;
  if (!schema_arg.empty()) {
    schema = json_arg(schema_arg);
  } else if (fs::exists(schema_path_for(path))) {
    schema = read_text(schema_path_for(path));
  } else {
    usage_error("no --schema given and no '" + schema_path_for(path) + "' next to the input");
  }
  cs_dataset* d = nullptr;
  check(cs_dataset_read(path.c_str(), schema.c_str(), &d));
  return Dataset(d);
}

void save_dataset(const cs_dataset* d, const std::string& path) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  check(cs_dataset_write(d, path.c_str()));
  char* schema = nullptr;
  check(cs_dataset_schema(d, &schema));
  write_text(schema_path_for(path), take(schema));
}

Boundaries load_boundaries(const std::string& path, const std::string& name_prop, const std::string& sector_prop) {
  cs_boundaries* b = nullptr;
  check(cs_boundaries_read(path.c_str(), name_prop.c_str(), sector_prop.c_str(), &b));
  Boundaries out(b);
  char* w = nullptr;
  check(cs_boundaries_warnings(out.get(), &w));
  const std::string warnings = take(w);
  if (warnings != "[]") std::cerr << "boundary warnings: " << warnings << "\n";
  return out;
}

/// --seed, then CITYSAFE_SEED, then the fallback.
std::optional<std::uint64_t> resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv("CITYSAFE_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used != std::strlen(env)) throw std::invalid_argument(env);
      return v;
    } catch (const std::exception&) {
      usage_error(std::string("CITYSAFE_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return std::nullopt;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string json_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Community public-safety analysis pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cs_version()));

  std::optional<std::uint64_t> seed_flag;
  std::string out;

  // run
  auto* run = app.add_subcommand("run", "Run the full pipeline from a JSON config");
  std::string config_path;
  run->add_option("--config", config_path, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--seed", seed_flag, "Override the config seed");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse and clean one CSV");
  std::string input, schema, policy, rules, categorize_spec;
  ingest->add_option("--input", input, "Source CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--schema", schema, "Column kinds (JSON or file)")->required();
  ingest->add_option("--policy", policy, "Cleaning policy (JSON or file)");
  ingest->add_option("--categorize", categorize_spec, "DESCRIPTION_COLUMN:CATEGORY_COLUMN to map incident categories");
  ingest->add_option("--category-rules", rules, "Keyword rules (JSON or file); built-in rules otherwise");
  ingest->add_option("--out", out, "Cleaned CSV (schema written next to it)")->required();

  // geocode
  auto* geocode = app.add_subcommand("geocode", "Attach coordinates and community names");
  std::string boundaries, name_prop = "name", sector_prop = "sector", columns;
  geocode->add_option("--input", input, "Cleaned CSV")->required()->check(CLI::ExistingFile);
  geocode->add_option("--schema", schema, "Column kinds; defaults to <input>.schema.json");
  geocode->add_option("--boundaries", boundaries, "Community GeoJSON")->required()->check(CLI::ExistingFile);
  geocode->add_option("--name-property", name_prop, "Feature property holding the community name");
  geocode->add_option("--sector-property", sector_prop, "Feature property holding the sector");
  geocode->add_option("--columns", columns, "Column mapping {latitude, longitude, community, point, source}");
  geocode->add_option("--out", out, "Geocoded CSV")->required();

  // features
  auto* features = app.add_subcommand("features", "Aggregate geocoded datasets per community");
  std::vector<std::string> dataset_specs;
  std::string features_config, top_metric;
  std::size_t top_k = 10;
  features->add_option("--boundaries", boundaries, "Community GeoJSON")->required()->check(CLI::ExistingFile);
  features->add_option("--dataset", dataset_specs, "ROLE=PATH of a geocoded CSV (repeatable)")->required();
  features->add_option("--features-config", features_config, "Column names used by the aggregation");
  features->add_option("--top", top_metric, "Also write the top-k table for this metric");
  features->add_option("--k", top_k, "Rows in the top-k table");
  features->add_option("--out", out, "Output directory")->required();

  // model
  auto* model = app.add_subcommand("model", "Correlation, chi-square selection and regression");
  std::string features_csv, target, predictors, model_options;
  double alpha = 0.05, test_fraction = 0.2;
  int bins = 4;
  model->add_option("--features", features_csv, "Community feature CSV")->required()->check(CLI::ExistingFile);
  model->add_option("--target", target, "Target column")->required();
  model->add_option("--predictors", predictors, "Comma-separated candidates; every other column otherwise");
  model->add_option("--alpha", alpha, "Chi-square significance level");
  model->add_option("--bins", bins, "Quantile bins for the chi-square test");
  model->add_option("--test-fraction", test_fraction, "Held-out share of rows");
  model->add_option("--options", model_options, "Forest options {forest: {...}} (JSON or file)");
  model->add_option("--seed", seed_flag, "Split and forest seed");
  model->add_option("--out", out, "Output directory")->required();

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Silhouette-driven grid search over one algorithm");
  std::string algo, grid = "{}", lat_col = "latitude", lon_col = "longitude", id_col;
  std::size_t sample_size = 0;
  bool force = false, paper_defaults = false, haversine = false;
  cluster->add_option("--input", input, "Geocoded CSV")->required()->check(CLI::ExistingFile);
  cluster->add_option("--schema", schema, "Column kinds; defaults to <input>.schema.json");
  cluster->add_option("--algo", algo, "kmeans | clarans | dbscan | optics | agglo | clique")->required();
  cluster->add_option("--grid", grid, "Parameter grid (JSON or file)");
  cluster->add_option("--seed", seed_flag, "Search seed");
  cluster->add_option("--lat", lat_col, "Latitude column");
  cluster->add_option("--lon", lon_col, "Longitude column");
  cluster->add_option("--id", id_col, "Identifier column for the map");
  cluster->add_option("--sample-size", sample_size, "Subsample to at most this many points (0 = all)");
  cluster->add_flag("--haversine", haversine, "Great-circle distances in km instead of degrees");
  cluster->add_flag("--force", force, "Cluster even when most points are community centroids");
  cluster->add_flag("--paper-defaults", paper_defaults, "k-means with 5 iterations and seed 0");
  cluster->add_option("--out", out, "Output directory")->required();

  // export
  auto* exp = app.add_subcommand("export", "Choropleth GeoJSON for one metric");
  std::string metric;
  int map_bins = 5;
  exp->add_option("--features", features_csv, "Community feature CSV")->required()->check(CLI::ExistingFile);
  exp->add_option("--boundaries", boundaries, "Community GeoJSON")->required()->check(CLI::ExistingFile);
  exp->add_option("--metric", metric, "Feature column")->required();
  exp->add_option("--bins", map_bins, "Quantile bins");
  exp->add_option("--out", out, "Output GeoJSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      const auto seed = resolve_seed(seed_flag);
      char* manifest = nullptr;
      char* stage = nullptr;
      const cs_status s = cs_pipeline_run(config_path.c_str(), out.c_str(), seed ? 1 : 0, seed.value_or(0),
                                          &manifest, &stage);
      const std::string failed = take(stage);
      if (s != CS_OK) {
        std::cerr << "citysafe: " << cs_last_error() << "\n";
        if (!failed.empty()) std::cerr << "failed stage: " << failed << "\n";
        return exit_code(s);
      }
      take(manifest);
      std::cout << "wrote " << (fs::path(out) / "manifest.json").string() << "\n";
    } else if (*ingest) {
      const std::string schema_json = json_arg(schema);
      const std::string csv = read_text(input);
      cs_dataset* raw = nullptr;
      check(cs_dataset_parse(csv.data(), csv.size(), schema_json.c_str(), fs::path(input).stem().c_str(), &raw));
      Dataset d(raw);
      if (!policy.empty()) {
        check(cs_dataset_apply_policy(d.get(), json_arg(policy).c_str()));
      } else {
        check(cs_dataset_drop_duplicates(d.get()));
      }
      if (!categorize_spec.empty()) {
        const auto colon = categorize_spec.find(':');
        if (colon == std::string::npos) usage_error("--categorize expects DESCRIPTION_COLUMN:CATEGORY_COLUMN");
        const std::string rules_json = rules.empty() ? std::string() : json_arg(rules);
        check(cs_dataset_categorize(d.get(), categorize_spec.substr(0, colon).c_str(),
                                    categorize_spec.substr(colon + 1).c_str(),
                                    rules.empty() ? nullptr : rules_json.c_str()));
      } else if (!rules.empty()) {
        usage_error("--category-rules needs --categorize");
      }
      save_dataset(d.get(), out);
      std::cout << cs_dataset_row_count(d.get()) << " rows -> " << out << "\n";
    } else if (*geocode) {
      Dataset d = load_dataset(input, schema);
      Boundaries b = load_boundaries(boundaries, name_prop, sector_prop);
      const std::string cols = columns.empty() ? std::string() : json_arg(columns);
      char* report = nullptr;
      check(cs_geocode(d.get(), b.get(), columns.empty() ? nullptr : cols.c_str(), &report));
      save_dataset(d.get(), out);
      std::cout << take(report) << "\n";
    } else if (*features) {
      Boundaries b = load_boundaries(boundaries, name_prop, sector_prop);
      std::vector<Dataset> owned;
      std::vector<std::string> roles;
      for (const auto& spec : dataset_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) usage_error("--dataset expects ROLE=PATH, got '" + spec + "'");
        roles.push_back(spec.substr(0, eq));
        owned.push_back(load_dataset(spec.substr(eq + 1), ""));
      }
      std::vector<const cs_dataset*> ptrs;
      std::vector<const char*> role_ptrs;
      for (std::size_t i = 0; i < owned.size(); ++i) {
        ptrs.push_back(owned[i].get());
        role_ptrs.push_back(roles[i].c_str());
      }
      const std::string cfg = features_config.empty() ? std::string() : json_arg(features_config);
      cs_features* raw = nullptr;
      char* warnings = nullptr;
      check(cs_features_build(ptrs.data(), role_ptrs.data(), ptrs.size(), b.get(),
                              features_config.empty() ? nullptr : cfg.c_str(), &raw, &warnings));
      Features f(raw);
      const std::string w = take(warnings);
      if (w != "[]") std::cerr << "warnings: " << w << "\n";
      char* csv = nullptr;
      char* json = nullptr;
      check(cs_features_to_csv(f.get(), &csv));
      write_text(fs::path(out) / "community_features.csv", take(csv));
      check(cs_features_to_json(f.get(), &json));
      write_text(fs::path(out) / "community_features.json", take(json));
      if (!top_metric.empty()) {
        char* top = nullptr;
        check(cs_features_top_k(f.get(), top_metric.c_str(), top_k, &top));
        write_text(fs::path(out) / ("top" + std::to_string(top_k) + ".csv"), take(top));
      }
      std::cout << cs_features_row_count(f.get()) << " communities -> " << out << "\n";
    } else if (*model) {
      cs_features* raw = nullptr;
      check(cs_features_parse_csv(read_text(features_csv).c_str(), &raw));
      Features f(raw);
      std::string options = model_options.empty() ? std::string("{}") : json_arg(model_options);
      // Flags come last so they win over keys in the options document.
      {
        std::string extra = "\"alpha\":" + std::to_string(alpha) + ",\"bins\":" + std::to_string(bins) +
                            ",\"test_fraction\":" + std::to_string(test_fraction);
        if (const auto seed = resolve_seed(seed_flag)) extra += ",\"seed\":" + std::to_string(*seed);
        const auto close = options.rfind('}');
        if (close == std::string::npos) usage_error("--options must be a JSON object");
        const auto last = options.find_last_not_of(" \t\r\n", close - 1);
        const bool empty = last == std::string::npos || options[last] == '{';
        options.insert(close, (empty ? "" : ",") + extra);
      }
      std::string predictors_json;
      if (!predictors.empty()) {
        predictors_json = "[";
        for (const auto& p : split_list(predictors)) {
          if (predictors_json.size() > 1) predictors_json += ",";
          predictors_json += json_quote(p);
        }
        predictors_json += "]";
      }
      char* report = nullptr;
      check(cs_model_run(f.get(), target.c_str(), predictors.empty() ? nullptr : predictors_json.c_str(),
                         options.c_str(), &report));
      write_text(fs::path(out) / "model_report.json", take(report));
      char* csv = nullptr;
      char* json = nullptr;
      check(cs_correlation(f.get(), &csv, &json));
      write_text(fs::path(out) / "correlation.csv", take(csv));
      write_text(fs::path(out) / "correlation.json", take(json));
      std::cout << "wrote " << (fs::path(out) / "model_report.json").string() << "\n";
    } else if (*cluster) {
      Dataset d = load_dataset(input, schema);
      std::string grid_json = json_arg(grid);
      std::optional<std::uint64_t> seed = resolve_seed(seed_flag);
      if (paper_defaults) {
        if (algo != "kmeans") usage_error("--paper-defaults applies to kmeans only");
        if (grid_json.find("\"max_iter\"") == std::string::npos) {
          const auto brace = grid_json.find('{');
          if (brace == std::string::npos) usage_error("--grid must be a JSON object");
          const bool empty = grid_json.find_first_not_of(" \t\r\n", brace + 1) == grid_json.find('}', brace);
          grid_json.insert(brace + 1, std::string("\"max_iter\":5") + (empty ? "" : ","));
        }
        seed = 0;
      }
      cs_cluster_result* raw = nullptr;
      check(cs_cluster_search_dataset(d.get(), lat_col.c_str(), lon_col.c_str(), id_col.empty() ? nullptr : id_col.c_str(),
                                      sample_size, algo.c_str(), grid_json.c_str(), seed.value_or(0),
                                      haversine ? 1 : 0, force ? 1 : 0, &raw));
      ClusterResult r(raw);
      char* csv = nullptr;
      char* geo = nullptr;
      char* params = nullptr;
      check(cs_cluster_result_grid_csv(r.get(), &csv));
      write_text(fs::path(out) / (algo + "_grid.csv"), take(csv));
      check(cs_cluster_result_geojson(r.get(), &geo));
      write_text(fs::path(out) / (algo + "_best.geojson"), take(geo));
      char* labels = nullptr;
      check(cs_cluster_result_labels_csv(r.get(), &labels));
      write_text(fs::path(out) / (algo + "_labels.csv"), take(labels));
      check(cs_cluster_result_params(r.get(), &params));
      const std::string best = take(params);
      write_text(fs::path(out) / (algo + "_best_params.json"), best + "\n");
      double sil = 0.0;
      check(cs_cluster_result_silhouette(r.get(), &sil));
      std::cout << "best " << best << " silhouette=" << sil
                << " clusters=" << cs_cluster_result_n_clusters(r.get()) << "\n";
    } else if (*exp) {
      cs_features* raw = nullptr;
      check(cs_features_parse_csv(read_text(features_csv).c_str(), &raw));
      Features f(raw);
      Boundaries b = load_boundaries(boundaries, name_prop, sector_prop);
      char* geo = nullptr;
      check(cs_export_choropleth(f.get(), metric.c_str(), b.get(), map_bins, &geo));
      write_text(out, take(geo));
      std::cout << "wrote " << out << "\n";
    }
  } catch (const Failure& f) {
    std::cerr << "citysafe: " << f.message << "\n";
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "citysafe: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
