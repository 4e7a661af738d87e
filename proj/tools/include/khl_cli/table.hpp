#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace khl::cli {

/// A parsed CSV file: header plus string cells. Fields may be double-quoted
/// ("" escapes a quote); no embedded newlines.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Eigen::Index column(const std::string& name) const;  ///< throws InputError if absent
  std::vector<std::string> strings(const std::string& name) const;
};

Table read_table(const std::string& path);

/// Observations from a data table: every `y_`-prefixed column, in header order.
Eigen::MatrixXd response_matrix(const Table& table, std::vector<std::string>* names = nullptr);

/// Numeric matrix file with an optional header row (used for custom contrasts).
Eigen::MatrixXd read_numeric_matrix(const std::string& path);

std::string format_double(double v);

}  // namespace khl::cli
