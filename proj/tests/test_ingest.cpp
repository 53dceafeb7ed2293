#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "citysafe/error.hpp"
#include "citysafe/ingest.hpp"
#include "citysafe/rng.hpp"

using namespace citysafe;

namespace {

Schema ints(std::initializer_list<const char*> names) {
  Schema s;
  for (const char* n : names) s.columns.push_back({n, ColumnKind::integer});
  return s;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

}  // namespace

TEST_CASE("parse_table reads a minimal table") {
  const Dataset d = parse_table("a,b\n1,2\n", ints({"a", "b"}));
  REQUIRE(d.row_count() == 1);
  CHECK(std::get<std::int64_t>(d.rows()[0][0]) == 1);
  CHECK(std::get<std::int64_t>(d.rows()[0][1]) == 2);
}

TEST_CASE("unparseable cells become null") {
  const Dataset d = parse_table("a,b\nabc,2\n", ints({"a", "b"}));
  REQUIRE(d.row_count() == 1);
  CHECK(is_null(d.rows()[0][0]));
  CHECK(std::get<std::int64_t>(d.rows()[0][1]) == 2);
}

TEST_CASE("parse keeps duplicate rows") {
  CHECK(parse_table("a,b\n1,2\n1,2\n", ints({"a", "b"})).row_count() == 2);
}

TEST_CASE("parse errors") {
  CHECK(code_of([] { parse_table("", ints({"a"})); }) == ErrorCode::empty_dataset);
  CHECK(code_of([] { parse_table("a,c\n1,2\n", ints({"a", "b"})); }) == ErrorCode::schema);
  CHECK(code_of([] { parse_table("a\n1\n", ints({"a", "b"})); }) == ErrorCode::schema);
  CHECK(code_of([] { parse_table("a,b\n1\n", ints({"a", "b"})); }) == ErrorCode::schema);
}

TEST_CASE("split_csv handles quoting and CRLF") {
  const auto rec = split_csv("x,y\r\n\"a,b\",\"say \"\"hi\"\"\"\r\n\"multi\nline\",z\n");
  REQUIRE(rec.size() == 3);
  CHECK(rec[1][0] == "a,b");
  CHECK(rec[1][1] == "say \"hi\"");
  CHECK(rec[2][0] == "multi\nline");
}

TEST_CASE("column kinds") {
  Schema s;
  s.columns = {{"t", ColumnKind::text}, {"r", ColumnKind::real}, {"d", ColumnKind::date}, {"p", ColumnKind::latlon}};
  const Dataset d = parse_table("t,r,d,p\nhello,2.5,2019-03,\"(51.0, -114.1)\"\n", s);
  const Row& r = d.rows()[0];
  CHECK(std::get<std::string>(r[0]) == "hello");
  CHECK(std::get<double>(r[1]) == 2.5);
  CHECK(std::get<Date>(r[2]) == Date{2019, 3, 0});
  CHECK(std::get<LatLon>(r[3]) == LatLon{51.0, -114.1});
  CHECK(parse_date("2020-02-29T10:00:00") == Date{2020, 2, 29});
  CHECK_FALSE(parse_date("2019-13-01").has_value());
}

TEST_CASE("drop_duplicates") {
  const Schema s = ints({"a", "b"});
  CHECK(drop_duplicates(parse_table("a,b\n1,2\n3,4\n1,2\n", s)) == parse_table("a,b\n1,2\n3,4\n", s));
  CHECK(drop_duplicates(parse_table("a,b\n1,2\n1,5\n1,2\n", s)) == parse_table("a,b\n1,2\n1,5\n", s));
  const Dataset empty("e", s.columns);
  CHECK(drop_duplicates(empty).row_count() == 0);
}

TEST_CASE("duplicates compare trimmed text") {
  Schema s;
  s.columns = {{"t", ColumnKind::text}};
  CHECK(drop_duplicates(parse_table("t\nx\n x \n", s)).row_count() == 1);
}

TEST_CASE("impute_missing") {
  Schema s;
  s.columns = {{"count", ColumnKind::integer}, {"latitude", ColumnKind::real}, {"note", ColumnKind::text}};
  const Dataset d = parse_table("count,latitude,note\n,51.0,\n3,,x\n4,51.1,\n", s);
  CleaningPolicy p;
  p.zero_fill_columns = {"count"};
  p.drop_null_columns = {"latitude"};
  const Dataset out = impute_missing(d, p);
  REQUIRE(out.row_count() == 2);
  CHECK(as_number(out.rows()[0][0]) == 0.0);
  CHECK(as_number(out.rows()[1][0]) == 4.0);
  CHECK(is_null(out.rows()[0][2]));

  CleaningPolicy unknown;
  unknown.zero_fill_columns = {"nope"};
  CHECK(code_of([&] { impute_missing(d, unknown); }) == ErrorCode::configuration);
  CleaningPolicy both;
  both.zero_fill_columns = {"count"};
  both.drop_null_columns = {"count"};
  CHECK(code_of([&] { impute_missing(d, both); }) == ErrorCode::configuration);
}

TEST_CASE("incident categories") {
  CategoryRules rules;
  rules.rules = {{"2 vehicle", "2 vehicle incident", 1}, {"pedestrian", "Pedestrian involved", 2}};
  rules.normalizers = {{"two", "2"}};
  CHECK(map_incident_category("Two vehicle incident at 5 Ave", rules) == "2 vehicle incident");
  CHECK(map_incident_category("Pedestrian struck", rules) == "Pedestrian involved");
  CHECK(map_incident_category("unusual event text", rules) == "Traffic Incident");
}

TEST_CASE("priority decides between matching rules") {
  CategoryRules rules;
  rules.rules = {{"vehicle", "Vehicle", 5}, {"stalled", "Stalled", 1}};
  CHECK(map_incident_category("stalled vehicle", rules) == "Stalled");
  rules.rules[0].priority = 0;
  CHECK(map_incident_category("stalled vehicle", rules) == "Vehicle");
}

TEST_CASE("rule validation") {
  CategoryRules rules;
  CHECK(code_of([&] { rules.validate(); }) == ErrorCode::configuration);
  rules.rules = {{"a", "A", 1}, {"b", "B", 1}};
  CHECK(code_of([&] { rules.validate(); }) == ErrorCode::configuration);
  CHECK_NOTHROW(default_category_rules().validate());
}

TEST_CASE("default rules cover the incident categories") {
  const auto& r = default_category_rules();
  CHECK(map_incident_category("Two vehicle incident", r) != "Traffic Incident");
  CHECK(map_incident_category("Multi-vehicle incident", r) != "Traffic Incident");
  CHECK(map_incident_category("Stalled vehicle", r) != "Traffic Incident");
  CHECK(map_incident_category("Pedestrian struck", r) != "Traffic Incident");
  CHECK(map_incident_category("Something else", r) == "Traffic Incident");
}

TEST_CASE("categorize adds the column and maps null descriptions to the default") {
  Schema s;
  s.columns = {{"description", ColumnKind::text}};
  const Dataset d = parse_table("description\nPedestrian struck\n\n", s);
  // the blank line is not a record; add an explicit null row
  Dataset with_null = d;
  with_null.push_row({std::monostate{}});
  const Dataset out = categorize(with_null, "description", "category", default_category_rules());
  const std::size_t c = out.column_index("category");
  CHECK(std::get<std::string>(out.rows()[1][c]) == default_category_rules().default_category);
}

// ---- properties -----------------------------------------------------------

namespace {

Dataset random_dataset(Rng& rng) {
  Schema s;
  s.columns = {{"k", ColumnKind::integer}, {"v", ColumnKind::real}, {"t", ColumnKind::text}};
  std::string csv = "k,v,t\n";
  const std::size_t n = rng.index(30);
  for (std::size_t i = 0; i < n; ++i) {
    csv += std::to_string(rng.index(4)) + ",";
    if (rng.index(5) != 0) csv += std::to_string(static_cast<double>(rng.index(3)) * 0.5);
    csv += ",";
    const char* texts[] = {"a", "b, c", "say \"x\"", "", "line\nbreak"};
    const std::string t = texts[rng.index(5)];
    if (t.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char ch : t) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      csv += q + "\"";
    } else {
      csv += t;
    }
    csv += "\n";
  }
  if (n == 0) csv += "1,1,a\n";
  return parse_table(csv, s);
}

}  // namespace

TEST_CASE("property: drop_duplicates is idempotent") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Dataset d = random_dataset(rng);
    const Dataset once = drop_duplicates(d);
    CHECK(drop_duplicates(once) == once);
  }
}

TEST_CASE("property: imputation only removes drop-null rows and keeps non-null values") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Dataset d = random_dataset(rng);
    CleaningPolicy p;
    p.zero_fill_columns = {"k"};
    p.drop_null_columns = {"v"};
    const Dataset out = impute_missing(d, p);
    std::size_t kept = 0;
    for (const auto& row : d.rows()) {
      if (is_null(row[1])) continue;
      const Row& o = out.rows()[kept++];
      if (!is_null(row[0])) CHECK(format_value(o[0]) == format_value(row[0]));
      CHECK(format_value(o[1]) == format_value(row[1]));
    }
    CHECK(kept == out.row_count());
  }
}

TEST_CASE("property: categorization is total and deterministic") {
  Rng rng(13);
  const auto& rules = default_category_rules();
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const std::size_t len = rng.index(40);
    for (std::size_t i = 0; i < len; ++i) s += static_cast<char>(1 + rng.index(255));
    const std::string a = map_incident_category(s, rules);
    CHECK(a == map_incident_category(s, rules));
    CHECK_FALSE(a.empty());
  }
}

TEST_CASE("property: parse, serialize, parse round-trips") {
  Rng rng(14);
  Schema s;
  s.columns = {{"k", ColumnKind::integer}, {"v", ColumnKind::real}, {"t", ColumnKind::text}};
  for (int trial = 0; trial < 200; ++trial) {
    const Dataset d = random_dataset(rng);
    CHECK(parse_table(serialize_table(d), s) == d);
  }
}
