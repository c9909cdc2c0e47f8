#include "warpski/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "warpski/error.hpp"

namespace warpski {

void Table::add_column(const std::string& name, std::vector<double> values) {
  if (name.empty() || name.find_first_of(",\n\"") != std::string::npos) {
    throw IoError("invalid column name '" + name + "'");
  }
  if (has_column(name)) throw IoError("duplicate column '" + name + "'");
  if (!columns_.empty() && values.size() != num_rows()) {
    throw DimensionError("column '" + name + "' has " + std::to_string(values.size()) +
                         " rows, table has " + std::to_string(num_rows()));
  }
  header_.push_back(name);
  columns_.push_back(std::move(values));
}

void Table::add_column(const std::string& name, const Vector& values) {
  add_column(name, std::vector<double>(values.data(), values.data() + values.size()));
}

bool Table::has_column(const std::string& name) const {
  for (const auto& h : header_) {
    if (h == name) return true;
  }
  return false;
}

const std::vector<double>& Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return columns_[i];
  }
  throw IoError("no column named '" + name + "'");
}

Vector Table::column_vector(const std::string& name) const {
  const auto& c = column(name);
  return Eigen::Map<const Vector>(c.data(), static_cast<Index>(c.size()));
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

}  // namespace

void write_csv(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << join(table.header()) << '\n';
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    for (std::size_t c = 0; c < table.num_columns(); ++c) {
      if (c) out << ',';
      out << format_number(table.column(c)[r]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

Table read_csv(const std::string& path, const std::vector<std::string>& expected) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file, expected a header row");
  const auto header = split_line(strip_cr(line));
  if (!expected.empty() && header != expected) {
    throw IoError(path + ": header is '" + join(header) + "', expected columns '" + join(expected) +
                  "'");
  }
  std::vector<std::vector<double>> cols(header.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw IoError(path + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(header.size()) + " fields, found " +
                    std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& s = cells[c];
      double v = 0.0;
      const char* b = s.data();
      const char* e = b + s.size();
      if (b != e && *b == '+') ++b;
      const auto res = std::from_chars(b, e, v);
      if (s.empty() || res.ec != std::errc() || res.ptr != e) {
        throw IoError(path + ":" + std::to_string(lineno) + ": field '" + header[c] +
                      "' is not a number: '" + s + "'");
      }
      cols[c].push_back(v);
    }
  }
  Table t;
  for (std::size_t c = 0; c < header.size(); ++c) t.add_column(header[c], std::move(cols[c]));
  return t;
}

void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "key,value\n";
  for (const auto& [k, v] : rows) {
    if (k.find_first_of(",\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw IoError("key/value row '" + k + "' contains a separator");
    }
    out << k << ',' << v << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<std::pair<std::string, std::string>> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "key,value") {
    throw IoError(path + ": expected header 'key,value'");
  }
  std::vector<std::pair<std::string, std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto pos = line.find(',');
    if (pos == std::string::npos) {
      throw IoError(path + ":" + std::to_string(lineno) + ": expected key,value");
    }
    rows.emplace_back(line.substr(0, pos), line.substr(pos + 1));
  }
  return rows;
}

}  // namespace warpski
