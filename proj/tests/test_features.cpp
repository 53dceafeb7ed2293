#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "citysafe/error.hpp"
#include "citysafe/features.hpp"
#include "citysafe/ingest.hpp"
#include "citysafe/rng.hpp"

using namespace citysafe;

namespace {

BoundarySet three_squares() {
  std::vector<Community> cs;
  const char* names[] = {"ALPHA", "BETA", "GAMMA"};
  for (int i = 0; i < 3; ++i) {
    Community c;
    c.name = names[i];
    c.sector = "S";
    const double x = i * 2.0;
    c.rings = {{GeoPoint(0, x), GeoPoint(1, x), GeoPoint(1, x + 1), GeoPoint(0, x + 1), GeoPoint(0, x)}};
    cs.push_back(std::move(c));
  }
  return BoundarySet(std::move(cs));
}

Dataset table(const std::string& csv, std::vector<Column> cols) {
  Schema s;
  s.columns = std::move(cols);
  return parse_table(csv, s);
}

std::optional<double> value(const FeatureTable& t, std::string_view community, std::string_view col) {
  return t.column(col).values[*t.row_of(community)];
}

Dataset dated(const std::string& rows) {
  return table("date,category\n" + rows, {{"date", ColumnKind::date}, {"category", ColumnKind::text}});
}

}  // namespace

TEST_CASE("streetlights aggregate to count, mean and total") {
  const BoundarySet b = three_squares();
  const Dataset lights = table("community,wattage\nALPHA,100\nALPHA,100\nALPHA,100\n",
                               {{"community", ColumnKind::text}, {"wattage", ColumnKind::real}});
  FeatureSources src;
  src.streetlights = &lights;
  const FeatureTable t = aggregate_by_community(src, b);
  CHECK(value(t, "ALPHA", "streetlight_count") == 3.0);
  CHECK(value(t, "ALPHA", "mean_wattage") == 100.0);
  CHECK(value(t, "ALPHA", "total_wattage") == 300.0);
  CHECK(value(t, "BETA", "streetlight_count") == 0.0);
  CHECK_FALSE(value(t, "BETA", "mean_wattage").has_value());
}

TEST_CASE("null wattage counts but does not enter the mean") {
  const BoundarySet b = three_squares();
  const Dataset lights = table("community,wattage\nALPHA,100\nALPHA,\nALPHA,200\n",
                               {{"community", ColumnKind::text}, {"wattage", ColumnKind::real}});
  FeatureSources src;
  src.streetlights = &lights;
  const FeatureTable t = aggregate_by_community(src, b);
  CHECK(value(t, "ALPHA", "streetlight_count") == 3.0);
  CHECK(value(t, "ALPHA", "mean_wattage") == 150.0);
}

TEST_CASE("missing sources and communities give zeros") {
  const BoundarySet b = three_squares();
  const Dataset pets = table("community,species\nALPHA,Cat\nALPHA,dog\nBETA,Dog\n",
                             {{"community", ColumnKind::text}, {"species", ColumnKind::text}});
  FeatureSources src;
  src.pets = &pets;
  const FeatureTable t = aggregate_by_community(src, b);
  CHECK(t.row_count() == 3);
  CHECK(value(t, "GAMMA", "pet_total") == 0.0);
  CHECK(value(t, "ALPHA", "cat_count") == 1.0);
  CHECK(value(t, "ALPHA", "dog_count") == 1.0);
  CHECK(value(t, "BETA", "dog_count") == 1.0);
  CHECK(value(t, "ALPHA", "tree_count") == 0.0);
}

TEST_CASE("crime total sums the categories") {
  const BoundarySet b = three_squares();
  const Dataset crime = table("community,category,count\nALPHA,T1,2\nALPHA,T2,5\nBETA,T1,1\n",
                              {{"community", ColumnKind::text},
                               {"category", ColumnKind::text},
                               {"count", ColumnKind::integer}});
  FeatureSources src;
  src.crime = &crime;
  const FeatureTable t = aggregate_by_community(src, b);
  CHECK(value(t, "ALPHA", "crime_total") == 7.0);
  CHECK(value(t, "ALPHA", "crime:T1") == 2.0);
  CHECK(value(t, "ALPHA", "crime:T2") == 5.0);
  CHECK(value(t, "BETA", "crime:T2") == 0.0);
}

TEST_CASE("unknown communities are skipped with a warning, null ones silently") {
  const BoundarySet b = three_squares();
  Dataset trees = table("community\nALPHA\nNOWHERE\n", {{"community", ColumnKind::text}});
  trees.push_row({std::monostate{}});
  FeatureSources src;
  src.trees = &trees;
  std::vector<std::string> warnings;
  const FeatureTable t = aggregate_by_community(src, b, {}, &warnings);
  CHECK(value(t, "ALPHA", "tree_count") == 1.0);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("NOWHERE") != std::string::npos);
}

TEST_CASE("census columns and ratio") {
  const BoundarySet b = three_squares();
  const Dataset census = table(
      "community,population,male,female,dwellings,apartments,children\nALPHA,100,40,60,30,10,7\nBETA,5,5,0,2,1,1\n",
      {{"community", ColumnKind::text},
       {"population", ColumnKind::integer},
       {"male", ColumnKind::integer},
       {"female", ColumnKind::integer},
       {"dwellings", ColumnKind::integer},
       {"apartments", ColumnKind::integer},
       {"children", ColumnKind::integer}});
  FeatureSources src;
  src.census = &census;
  FeatureConfig cfg;
  cfg.census_passthrough = {"children"};
  const FeatureTable t = aggregate_by_community(src, b, cfg);
  CHECK(value(t, "ALPHA", "male_female_ratio") == doctest::Approx(40.0 / 60.0));
  CHECK_FALSE(value(t, "BETA", "male_female_ratio").has_value());
  CHECK(value(t, "ALPHA", "children") == 7.0);
  CHECK(value(t, "ALPHA", "population") == 100.0);
}

TEST_CASE("feature table csv round trip") {
  FeatureTable t({"A", "B, Ltd"});
  t.add_column("x", {1.5, std::nullopt});
  t.add_column("crime:Break & Enter", {0.0, 3.0});
  const FeatureTable back = feature_table_from_csv(feature_table_to_csv(t));
  CHECK(back == t);
  CHECK(feature_table_to_csv(t).rfind("community_name,", 0) == 0);
  CHECK_THROWS_AS(t.column("nope"), Error);
}

TEST_CASE("monthly series zero-fills gaps") {
  const TimeSeries ts = monthly_series(dated("2019-01-05,\n2019-01-20,\n2019-03-01,\n"), "date");
  REQUIRE(ts.points.size() == 3);
  CHECK(ts.points[0] == SeriesPoint{2019, 1, std::nullopt, 2});
  CHECK(ts.points[1] == SeriesPoint{2019, 2, std::nullopt, 0});
  CHECK(ts.points[2] == SeriesPoint{2019, 3, std::nullopt, 1});
}

TEST_CASE("monthly series single row and categories") {
  CHECK(monthly_series(dated("2020-06-01,\n"), "date").points.size() == 1);
  const TimeSeries ts = monthly_series(dated("2020-06-01,A\n2020-06-02,A\n2020-06-03,B\n"), "date",
                                       std::string_view("category"));
  REQUIRE(ts.points.size() == 2);
  CHECK(ts.points[0] == SeriesPoint{2020, 6, std::string("A"), 2});
  CHECK(ts.points[1] == SeriesPoint{2020, 6, std::string("B"), 1});
}

TEST_CASE("unparseable dates are counted") {
  Dataset d = dated("2020-06-01,\n");
  d.push_row({std::monostate{}, std::monostate{}});
  const TimeSeries ts = monthly_series(d, "date");
  CHECK(ts.skipped_rows == 1);
}

TEST_CASE("count column weights rows") {
  const Dataset d = table("date,count\n2020-01,3\n2020-01,\n2020-02,4\n",
                          {{"date", ColumnKind::date}, {"count", ColumnKind::integer}});
  const TimeSeries ts = monthly_series(d, "date", std::nullopt, std::string_view("count"));
  CHECK(ts.points[0].value == 3.0);
  CHECK(ts.points[1].value == 4.0);
}

TEST_CASE("monthly averages") {
  std::string rows;
  for (int i = 0; i < 10; ++i) rows += "2018-01-01,\n";
  for (int i = 0; i < 20; ++i) rows += "2019-01-01,\n";
  const auto avg = monthly_averages(monthly_series(dated(rows), "date"));
  CHECK(avg[0] == 15.0);
  // Feb 2018 .. Dec 2018 lie inside the span and were zero-filled
  CHECK(avg[1] == 0.0);
}

TEST_CASE("monthly averages with one year equal the counts") {
  const auto avg = monthly_averages(monthly_series(dated("2020-03-01,\n2020-03-02,\n2020-05-01,\n"), "date"));
  CHECK(avg[2] == 2.0);
  CHECK(avg[3] == 0.0);
  CHECK(avg[4] == 1.0);
  CHECK_FALSE(avg[0].has_value());
  CHECK_FALSE(avg[11].has_value());
}

TEST_CASE("month missing in one year contributes zero") {
  // Mar 2018 = 4, Mar 2019 absent but inside the span (2018-03 .. 2019-04)
  std::string rows;
  for (int i = 0; i < 4; ++i) rows += "2018-03-01,\n";
  rows += "2019-04-01,\n";
  const auto avg = monthly_averages(monthly_series(dated(rows), "date"));
  CHECK(avg[2] == 2.0);  // (4 + 0) / 2
  CHECK(avg[3] == 0.5);  // (0 + 1) / 2
  CHECK(avg[4] == 0.0);  // May 2018 only
}

TEST_CASE("yearly by category") {
  const TimeSeries ts = yearly_by_category(dated("2018-01-01,T1\n2018-05-01,T1\n2019-02-01,T1\n"), "date", "category");
  REQUIRE(ts.points.size() == 2);
  CHECK(ts.points[0] == SeriesPoint{2018, 0, std::string("T1"), 2});
  CHECK(ts.points[1] == SeriesPoint{2019, 0, std::string("T1"), 1});
  CHECK(yearly_by_category(Dataset("e", {{"date", ColumnKind::date}, {"category", ColumnKind::text}}), "date",
                           "category")
            .points.empty());
  const TimeSeries multi = yearly_by_category(dated("2018-01-01,A\n2018-05-01,B\n"), "date", "category");
  CHECK(multi.points.size() == 2);
}

TEST_CASE("top_k") {
  FeatureTable t({"A", "B", "C"});
  t.add_column("m", {5.0, 9.0, 1.0});
  const auto top = top_k(t, "m", 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].community == "B");
  CHECK(top[1].community == "A");
  CHECK(top_k(t, "m", 10).size() == 3);
  FeatureTable tie({"B", "A"});
  tie.add_column("m", {5.0, 5.0});
  CHECK(top_k(tie, "m", 1)[0].community == "A");
  CHECK_THROWS_AS(top_k(t, "m", 0), Error);
}

// ---- properties -----------------------------------------------------------

TEST_CASE("property: count columns sum to the geocoded rows") {
  const BoundarySet b = three_squares();
  Rng rng(31);
  const char* names[] = {"ALPHA", "BETA", "GAMMA", "ELSEWHERE", ""};
  for (int trial = 0; trial < 50; ++trial) {
    std::string csv = "community,wattage\n";
    std::size_t in_boundaries = 0;
    const std::size_t n = 1 + rng.index(60);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = rng.index(5);
      if (k < 3) ++in_boundaries;
      csv += std::string(names[k]) + "," + (rng.index(4) ? std::to_string(50 * (1 + rng.index(4))) : "") + "\n";
    }
    const Dataset lights = table(csv, {{"community", ColumnKind::text}, {"wattage", ColumnKind::real}});
    FeatureSources src;
    src.streetlights = &lights;
    const FeatureTable t = aggregate_by_community(src, b);
    double total = 0;
    for (const auto& v : t.column("streetlight_count").values) total += *v;
    CHECK(total == static_cast<double>(in_boundaries));
  }
}

TEST_CASE("property: series totals equal the dated rows") {
  Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    std::string rows;
    std::size_t good = 0;
    const std::size_t n = 1 + rng.index(80);
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.index(10) == 0) {
        rows += "garbage,A\n";
        continue;
      }
      ++good;
      rows += std::to_string(2015 + rng.index(4)) + "-" + std::to_string(1 + rng.index(12)) + "-01," +
              (rng.index(2) ? "A" : "B") + "\n";
    }
    const TimeSeries ts = monthly_series(dated(rows), "date", std::string_view("category"));
    double total = 0;
    for (const auto& p : ts.points) {
      CHECK(p.value >= 0);
      total += p.value;
    }
    if (good > 0) CHECK(total == static_cast<double>(good));
    CHECK(ts.skipped_rows == n - good);
  }
}

TEST_CASE("property: top_k is a prefix of the full sort") {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(15);
    std::vector<std::string> names;
    std::vector<std::optional<double>> vals;
    for (std::size_t i = 0; i < n; ++i) {
      names.push_back("C" + std::to_string(i));
      vals.push_back(static_cast<double>(rng.index(4)));
    }
    FeatureTable t(names);
    t.add_column("m", vals);
    const auto all = top_k(t, "m", n);
    for (std::size_t i = 1; i < all.size(); ++i) {
      CHECK((all[i - 1].value > all[i].value ||
             (all[i - 1].value == all[i].value && all[i - 1].community < all[i].community)));
    }
    const std::size_t k = 1 + rng.index(n);
    const auto part = top_k(t, "m", k);
    CHECK(std::equal(part.begin(), part.end(), all.begin()));
  }
}
