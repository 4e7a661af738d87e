#include "khl_cli/table.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "khl/errors.hpp"

namespace khl::cli {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  if (quoted) throw InputError("unterminated quote in CSV line");
  out.push_back(std::move(cell));
  return out;
}

bool parse_double(const std::string& s, double& v) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return false;
  const char* first = s.data() + b;
  const char* last = s.data() + e + 1;
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  return res.ec == std::errc() && res.ptr == last;
}

std::vector<std::vector<std::string>> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(split_line(line));
  }
  return lines;
}

}  // namespace

Eigen::Index Table::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<Eigen::Index>(j);
  throw InputError("column '" + name + "' not found");
}

std::vector<std::string> Table::strings(const std::string& name) const {
  const auto j = static_cast<std::size_t>(column(name));
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[j]);
  return out;
}

Table read_table(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw InputError("'" + path + "' is empty");
  Table t;
  t.header = std::move(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].size() != t.header.size())
      throw InputError("'" + path + "' line " + std::to_string(i + 1) + " has " + std::to_string(lines[i].size()) +
                       " fields, expected " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(lines[i]));
  }
  if (t.rows.empty()) throw InputError("'" + path + "' has no data rows");
  return t;
}

Eigen::MatrixXd response_matrix(const Table& table, std::vector<std::string>* names) {
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < table.header.size(); ++j)
    if (table.header[j].rfind("y_", 0) == 0) cols.push_back(j);
  if (cols.empty()) throw InputError("no response columns (names starting with y_)");
  Eigen::MatrixXd y(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      double v = 0.0;
      const std::string& cell = table.rows[i][cols[k]];
      if (!parse_double(cell, v) || !std::isfinite(v))
        throw InputError("row " + std::to_string(i + 1) + ", column '" + table.header[cols[k]] +
                         "': not a finite number ('" + cell + "')");
      y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
    }
  }
  if (names) {
    names->clear();
    for (std::size_t j : cols) names->push_back(table.header[j]);
  }
  return y;
}

Eigen::MatrixXd read_numeric_matrix(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw InputError("'" + path + "' is empty");
  double probe = 0.0;
  std::size_t start = parse_double(lines.front().front(), probe) ? 0 : 1;
  if (start >= lines.size()) throw InputError("'" + path + "' has no numeric rows");
  const std::size_t cols = lines[start].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(lines.size() - start), static_cast<Eigen::Index>(cols));
  for (std::size_t i = start; i < lines.size(); ++i) {
    if (lines[i].size() != cols) throw InputError("'" + path + "' has rows of different lengths");
    for (std::size_t j = 0; j < cols; ++j) {
      double v = 0.0;
      if (!parse_double(lines[i][j], v)) throw InputError("'" + path + "': non-numeric entry '" + lines[i][j] + "'");
      m(static_cast<Eigen::Index>(i - start), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return m;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace khl::cli
