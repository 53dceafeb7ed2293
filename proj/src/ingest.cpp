#include "citysafe/ingest.hpp"

#include <algorithm>
#include <unordered_set>

#include "citysafe/error.hpp"
#include "text.hpp"

namespace citysafe {

const Column* Schema::find(std::string_view name) const {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::vector<std::vector<std::string>> split_csv(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // Blank lines carry no record.
    if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started || trim(field).empty()) {
          field.clear();
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (!field.empty() || field_started || !record.empty()) end_record();
  return records;
}

Dataset parse_table(std::string_view csv, const Schema& schema, std::string name) {
  auto records = split_csv(csv);
  if (records.empty()) throw Error(ErrorCode::empty_dataset, "input '" + name + "' is empty");

  const auto& header = records.front();
  std::vector<Column> columns;
  columns.reserve(header.size());
  for (const auto& raw : header) {
    const std::string col_name(trim(raw));
    const Column* declared = schema.find(col_name);
    if (!declared) {
      throw Error(ErrorCode::schema, "column '" + col_name + "' is not declared in the schema");
    }
    if (std::any_of(columns.begin(), columns.end(),
                    [&](const Column& c) { return c.name == col_name; })) {
      throw Error(ErrorCode::schema, "column '" + col_name + "' appears twice in the header");
    }
    columns.push_back(*declared);
  }
  for (const auto& declared : schema.columns) {
    if (std::none_of(columns.begin(), columns.end(),
                     [&](const Column& c) { return c.name == declared.name; })) {
      throw Error(ErrorCode::schema, "declared column '" + declared.name + "' is missing from the header");
    }
  }

  Dataset out(std::move(name), columns);
  out.mutable_rows().reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != columns.size()) {
      throw Error(ErrorCode::schema, "record " + std::to_string(r) + " has " +
                                         std::to_string(rec.size()) + " fields, header has " +
                                         std::to_string(columns.size()) + " (column '" +
                                         columns[std::min(rec.size(), columns.size() - 1)].name +
                                         "')");
    }
    Row row;
    row.reserve(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) row.push_back(parse_value(rec[c], columns[c].kind));
    out.push_row(std::move(row));
  }
  return out;
}

namespace {

void append_field(std::string& out, std::string_view field) {
  const bool quote = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                     (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!quote) {
    out.append(field);
    return;
  }
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

std::string serialize_table(const Dataset& d) {
  std::string out;
  for (std::size_t c = 0; c < d.column_count(); ++c) {
    if (c) out.push_back(',');
    append_field(out, d.columns()[c].name);
  }
  out.push_back('\n');
  for (const auto& row : d.rows()) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out.push_back(',');
      append_field(out, format_value(row[c]));
    }
    out.push_back('\n');
  }
  return out;
}

Dataset drop_duplicates(const Dataset& d) {
  Dataset out(d.name(), d.columns());
  std::unordered_set<std::string> seen;
  seen.reserve(d.row_count());
  for (const auto& row : d.rows()) {
    std::string key;
    for (const auto& v : row) {
      // Null and empty text must not collide.
      if (is_null(v)) {
        key.append("\x1e");
      } else {
        key.append(trim(format_value(v)));
      }
      key.push_back('\x1f');
    }
    if (seen.insert(std::move(key)).second) out.push_row(row);
  }
  return out;
}

Dataset impute_missing(const Dataset& d, const CleaningPolicy& policy) {
  std::vector<std::size_t> zero_fill;
  std::vector<std::size_t> drop_null;
  for (const auto& name : policy.zero_fill_columns) {
    if (policy.drop_null_columns.count(name)) {
      throw Error(ErrorCode::configuration,
                  "column '" + name + "' is listed for both zero-fill and drop-null");
    }
    zero_fill.push_back(d.column_index(name));
  }
  for (const auto& name : policy.drop_null_columns) drop_null.push_back(d.column_index(name));

  Dataset out(d.name(), d.columns());
  for (const auto& row : d.rows()) {
    if (std::any_of(drop_null.begin(), drop_null.end(), [&](std::size_t c) { return is_null(row[c]); })) {
      continue;
    }
    Row copy = row;
    for (std::size_t c : zero_fill) {
      if (!is_null(copy[c])) continue;
      switch (d.columns()[c].kind) {
        case ColumnKind::integer: copy[c] = std::int64_t{0}; break;
        case ColumnKind::real: copy[c] = 0.0; break;
        case ColumnKind::text: copy[c] = std::string("0"); break;
        default:
          throw Error(ErrorCode::configuration, "column '" + d.columns()[c].name +
                                                    "' of kind " + std::string(to_string(d.columns()[c].kind)) +
                                                    " cannot be zero-filled");
      }
    }
    out.push_row(std::move(copy));
  }
  return out;
}

Dataset apply_policy(const Dataset& d, const CleaningPolicy& policy) {
  return impute_missing(policy.dedup ? drop_duplicates(d) : d, policy);
}

void CategoryRules::validate() const {
  if (rules.empty()) throw Error(ErrorCode::configuration, "category rule list is empty");
  std::unordered_set<int> priorities;
  for (const auto& r : rules) {
    if (r.keyword.empty()) throw Error(ErrorCode::configuration, "category rule with empty keyword");
    if (!priorities.insert(r.priority).second) {
      throw Error(ErrorCode::configuration,
                  "duplicate category rule priority " + std::to_string(r.priority));
    }
  }
}

const CategoryRules& default_category_rules() {
  static const CategoryRules rules = [] {
    CategoryRules r;
    r.rules = {
        {"pedestrian", "Pedestrian involved", 1},
        {"injur", "Incident with injuries", 2},
        {"lrt", "LRT incident", 3},
        {"multi-vehicle", "Multi-vehicle incident", 4},
        {"multi vehicle", "Multi-vehicle incident", 5},
        {"3 vehicle", "Multi-vehicle incident", 6},
        {"4 vehicle", "Multi-vehicle incident", 7},
        {"5 vehicle", "Multi-vehicle incident", 8},
        {"2 vehicle", "2 vehicle incident", 9},
        {"single vehicle", "Single vehicle incident", 10},
        {"stalled", "Stalled vehicle", 11},
        {"signal", "Traffic signal issue", 12},
        {"blocking", "Blocking", 13},
    };
    r.normalizers = {{"two", "2"}, {"three", "3"}, {"four", "4"}, {"five", "5"},
                     {"multiple", "multi"}, {"one", "single"}};
    return r;
  }();
  return rules;
}

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string apply_normalizers(std::string text, const std::vector<Normalizer>& normalizers) {
  for (const auto& n : normalizers) {
    const std::string from = to_lower(n.from);
    if (from.empty()) continue;
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
      const bool starts_word = i == 0 || !is_word_char(text[i - 1]);
      if (starts_word && text.compare(i, from.size(), from) == 0) {
        const std::size_t end = i + from.size();
        if (end == text.size() || !is_word_char(text[end])) {
          out.append(to_lower(n.to));
          i = end;
          continue;
        }
      }
      out.push_back(text[i++]);
    }
    text = std::move(out);
  }
  return text;
}

}  // namespace

std::string map_incident_category(std::string_view description, const CategoryRules& rules) {
  const std::string text = apply_normalizers(to_lower(description), rules.normalizers);
  const CategoryRule* best = nullptr;
  for (const auto& rule : rules.rules) {
    if (text.find(to_lower(rule.keyword)) == std::string::npos) continue;
    if (!best || rule.priority < best->priority) best = &rule;
  }
  return best ? best->category : rules.default_category;
}

Dataset categorize(const Dataset& d, std::string_view description_column,
                   std::string_view category_column, const CategoryRules& rules) {
  rules.validate();
  const std::size_t src = d.column_index(description_column);
  Dataset out = d;
  std::size_t dst;
  if (const auto existing = out.find_column(category_column)) {
    dst = *existing;
    if (out.columns()[dst].kind != ColumnKind::text) {
      throw Error(ErrorCode::configuration,
                  "category column '" + std::string(category_column) + "' must be text");
    }
  } else {
    dst = out.add_column({std::string(category_column), ColumnKind::text});
  }
  for (auto& row : out.mutable_rows()) {
    const std::string text = is_null(row[src]) ? std::string() : format_value(row[src]);
    row[dst] = map_incident_category(text, rules);
  }
  return out;
}

}  // namespace citysafe
