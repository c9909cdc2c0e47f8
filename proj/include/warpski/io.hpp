#pragma once

#include <string>
#include <utility>
#include <vector>

#include "warpski/types.hpp"

namespace warpski {

/// Named numeric columns of equal length.
class Table {
 public:
  Table() = default;

  void add_column(const std::string& name, std::vector<double> values);
  void add_column(const std::string& name, const Vector& values);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t num_columns() const { return header_.size(); }
  std::size_t num_rows() const { return columns_.empty() ? 0 : columns_.front().size(); }
  bool has_column(const std::string& name) const;
  /// Throws IoError naming the missing column.
  const std::vector<double>& column(const std::string& name) const;
  const std::vector<double>& column(std::size_t i) const { return columns_.at(i); }
  Vector column_vector(const std::string& name) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> columns_;
};

/// Shortest decimal text that reads back to the same double, always with a
/// '.' separator regardless of the locale.
std::string format_number(double v);

/// Writes a header row and one row per record.
void write_csv(const std::string& path, const Table& table);

/// Reads a CSV with a header row. When `expected` is non-empty the header
/// must match it exactly. Errors carry the path and line number.
Table read_csv(const std::string& path, const std::vector<std::string>& expected = {});

/// Two-column key,value file; values are written verbatim.
void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& rows);
std::vector<std::pair<std::string, std::string>> read_key_values(const std::string& path);

}  // namespace warpski
