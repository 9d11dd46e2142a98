#pragma once

#include "convexito/brownian.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace cvx {

/// Shortest round-trip decimal form of v ("nan", "inf", "-inf" for specials).
std::string format_number(double v);

/// In-memory CSV table; written once at the end of a run.
class Table {
 public:
  explicit Table(std::vector<std::string> header);

  void add_row(std::vector<std::string> row);
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  void write_csv(std::ostream& out) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Rows (t, mean, stderr, n, seed) for a batch of estimates.
Table estimates_table(const std::vector<MCEstimate>& estimates);

}  // namespace cvx
