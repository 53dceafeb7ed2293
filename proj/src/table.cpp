#include "citysafe/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "citysafe/error.hpp"
#include "text.hpp"

namespace citysafe {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::text: return "text";
    case ColumnKind::integer: return "integer";
    case ColumnKind::real: return "real";
    case ColumnKind::date: return "date";
    case ColumnKind::latlon: return "latlon";
  }
  return "text";
}

std::optional<ColumnKind> parse_column_kind(std::string_view name) {
  const std::string lower = to_lower(trim(name));
  if (lower == "text" || lower == "string") return ColumnKind::text;
  if (lower == "integer" || lower == "int") return ColumnKind::integer;
  if (lower == "real" || lower == "float" || lower == "double") return ColumnKind::real;
  if (lower == "date") return ColumnKind::date;
  if (lower == "latlon" || lower == "latlon-pair" || lower == "point") return ColumnKind::latlon;
  return std::nullopt;
}

std::optional<double> as_number(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

namespace {

std::string format_date(const Date& d) {
  char buf[32];
  if (d.day > 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02d", d.year, d.month);
  }
  return buf;
}

std::optional<int> parse_int_part(std::string_view s) {
  int out = 0;
  if (s.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return out;
}

std::optional<LatLon> parse_latlon(std::string_view text) {
  std::string_view s = trim(text);
  bool lon_first = false;
  const std::string upper = to_upper(s.substr(0, std::min<std::size_t>(s.size(), 5)));
  if (upper == "POINT") {
    // WKT stores x (longitude) first.
    s = trim(s.substr(5));
    lon_first = true;
  }
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')') s = trim(s.substr(1, s.size() - 2));
  std::size_t split = s.find(',');
  if (split == std::string_view::npos) {
    split = s.find(' ');
    if (split == std::string_view::npos) return std::nullopt;
  }
  const auto first = parse_double(trim(s.substr(0, split)));
  const auto second = parse_double(trim(s.substr(split + 1)));
  if (!first || !second) return std::nullopt;
  LatLon p = lon_first ? LatLon{*second, *first} : LatLon{*first, *second};
  if (p.latitude < -90.0 || p.latitude > 90.0 || p.longitude < -180.0 || p.longitude > 180.0) {
    return std::nullopt;
  }
  return p;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  std::string_view s = trim(text);
  if (s.size() > 10 && (s[4] == '-' || s[4] == '/') && (s[10] == 'T' || s[10] == ' ')) {
    // Timestamp: keep the calendar part.
    s = s.substr(0, 10);
  }
  const char sep = s.find('-') != std::string_view::npos ? '-' : '/';
  const auto parts = split(s, sep);
  if (parts.size() < 2 || parts.size() > 3) return std::nullopt;
  const auto y = parse_int_part(parts[0]);
  const auto m = parse_int_part(parts[1]);
  if (!y || !m || parts[0].size() != 4 || *m < 1 || *m > 12) return std::nullopt;
  Date d{*y, *m, 0};
  if (parts.size() == 3) {
    const auto day = parse_int_part(parts[2]);
    if (!day || *day < 1 || *day > 31) return std::nullopt;
    d.day = *day;
  }
  return d;
}

std::string format_value(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return {};
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(x);
        } else if constexpr (std::is_same_v<T, Date>) {
          return format_date(x);
        } else {
          return "(" + format_double(x.latitude) + ", " + format_double(x.longitude) + ")";
        }
      },
      v);
}

Value parse_value(std::string_view text, ColumnKind kind) {
  const std::string_view s = trim(text);
  if (s.empty()) return std::monostate{};
  switch (kind) {
    case ColumnKind::text:
      return std::string(s);
    case ColumnKind::integer: {
      std::int64_t out = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec == std::errc{} && ptr == s.data() + s.size()) return out;
      // Accept integral reals such as "12.0".
      if (const auto d = parse_double(s); d && std::floor(*d) == *d && std::fabs(*d) < 9.0e15) {
        return static_cast<std::int64_t>(*d);
      }
      return std::monostate{};
    }
    case ColumnKind::real: {
      if (const auto d = parse_double(s)) return *d;
      return std::monostate{};
    }
    case ColumnKind::date: {
      if (const auto d = parse_date(s)) return *d;
      return std::monostate{};
    }
    case ColumnKind::latlon: {
      if (const auto p = parse_latlon(s)) return *p;
      return std::monostate{};
    }
  }
  return std::monostate{};
}

Dataset::Dataset(std::string name, std::vector<Column> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {}

std::optional<std::size_t> Dataset::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Dataset::column_index(std::string_view name) const {
  if (const auto i = find_column(name)) return *i;
  throw Error(ErrorCode::configuration,
              "dataset '" + name_ + "' has no column '" + std::string(name) + "'");
}

std::size_t Dataset::add_column(Column column) {
  columns_.push_back(std::move(column));
  for (auto& row : rows_) row.emplace_back();
  return columns_.size() - 1;
}

void Dataset::push_row(Row row) {
  if (row.size() != columns_.size()) {
    throw Error(ErrorCode::internal, "row arity " + std::to_string(row.size()) +
                                         " does not match " + std::to_string(columns_.size()) +
                                         " columns");
  }
  rows_.push_back(std::move(row));
}

}  // namespace citysafe
