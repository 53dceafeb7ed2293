#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace citysafe {

enum class ColumnKind { text, integer, real, date, latlon };

std::string_view to_string(ColumnKind kind);
std::optional<ColumnKind> parse_column_kind(std::string_view name);

/// Calendar date; day is 0 when the source only carried year-month.
struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  auto operator<=>(const Date&) const = default;
};

struct LatLon {
  double latitude = 0.0;
  double longitude = 0.0;

  bool operator==(const LatLon&) const = default;
};

/// A single cell. std::monostate is the explicit null.
using Value = std::variant<std::monostate, std::string, std::int64_t, double, Date, LatLon>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

/// Numeric view of a cell: integers and reals, null otherwise.
std::optional<double> as_number(const Value& v);

/// Text form used by the CSV writer and for byte-wise row comparison.
std::string format_value(const Value& v);

/// Parses `text` as `kind`; returns null when the cell is blank or malformed.
Value parse_value(std::string_view text, ColumnKind kind);

/// Accepts YYYY-MM-DD, YYYY-MM, YYYY/MM/DD, YYYY/MM and ISO timestamps.
std::optional<Date> parse_date(std::string_view text);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::text;

  bool operator==(const Column&) const = default;
};

using Row = std::vector<Value>;

/// Typed table: every row holds exactly one value per column.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, std::vector<Column> columns);

  const std::string& name() const { return name_; }
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::vector<Row>& mutable_rows() { return rows_; }

  std::size_t row_count() const { return rows_.size(); }
  std::size_t column_count() const { return columns_.size(); }
  bool empty() const { return rows_.empty(); }

  std::optional<std::size_t> find_column(std::string_view name) const;
  /// Throws ErrorCode::configuration naming the column when absent.
  std::size_t column_index(std::string_view name) const;
  bool has_column(std::string_view name) const { return find_column(name).has_value(); }

  /// Appends a column filled with nulls and returns its index.
  std::size_t add_column(Column column);

  /// Throws ErrorCode::internal if the arity does not match.
  void push_row(Row row);

  bool operator==(const Dataset&) const = default;

 private:
  std::string name_;
  std::vector<Column> columns_;
  std::vector<Row> rows_;
};

}  // namespace citysafe
